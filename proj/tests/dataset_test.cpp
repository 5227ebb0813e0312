#include <gtest/gtest.h>

#include <filesystem>
#include <functional>
#include <fstream>
#include <iterator>
#include <map>
#include <set>
#include <string>

#include "hsband/dataset.hpp"
#include "hsband/errors.hpp"
#include "hsband/info_theory.hpp"
#include "support/files.hpp"

using namespace hsband;
namespace fs = std::filesystem;
using hsband::testing_support::slurp;
using hsband::testing_support::spit;
using hsband::testing_support::TempDir;

namespace {

FormatErrorKind kind_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const FormatError& e) {
        return e.kind();
    }
    ADD_FAILURE() << "expected FormatError";
    return FormatErrorKind::kIo;
}

GroundTruth blocks(std::uint32_t h, std::uint32_t w, std::vector<std::uint16_t> labels) {
    return GroundTruth(h, w, std::move(labels));
}

}  // namespace

TEST(CubeFile, RoundTripIsBitExact) {
    TempDir dir;
    const HyperCube cube(2, 2, 1, {0.1f, -2.5f, 1e-30f, 3.4e38f});
    write_cube(dir / "c.hsc", cube);
    const auto loaded = load_cube(dir / "c.hsc");
    EXPECT_EQ(loaded.height(), 2u);
    EXPECT_EQ(loaded.width(), 2u);
    EXPECT_EQ(loaded.bands(), 1u);
    ASSERT_EQ(loaded.data().size(), 4u);
    for (std::size_t i = 0; i < 4; ++i) {
        EXPECT_EQ(std::bit_cast<std::uint32_t>(loaded.data()[i]), std::bit_cast<std::uint32_t>(cube.data()[i]));
    }
}

TEST(CubeFile, ExactByteLayout) {
    TempDir dir;
    write_cube(dir / "c.hsc", HyperCube(1, 2, 1, {1.0f, -2.0f}));
    const std::string expected("HSC1\x01\0\0\0\x02\0\0\0\x01\0\0\0\0\0\x80\x3f\0\0\0\xc0", 24);
    EXPECT_EQ(slurp(dir / "c.hsc"), expected);
}

TEST(CubeFile, ByteIdenticalRewrite) {
    TempDir dir;
    const auto scene = generate_synthetic({.informative = 2, .noise_bands = 1, .height = 5, .width = 7, .seed = 4});
    write_cube(dir / "a.hsc", scene.cube);
    write_cube(dir / "b.hsc", load_cube(dir / "a.hsc"));
    EXPECT_EQ(slurp(dir / "a.hsc"), slurp(dir / "b.hsc"));
    write_ground_truth(dir / "a.hsg", scene.gt);
    write_ground_truth(dir / "b.hsg", load_ground_truth(dir / "a.hsg"));
    EXPECT_EQ(slurp(dir / "a.hsg"), slurp(dir / "b.hsg"));
}

TEST(CubeFile, ErrorVariants) {
    TempDir dir;
    write_ground_truth(dir / "g.hsg", blocks(1, 2, {1, 2}));
    EXPECT_EQ(kind_of([&] { load_cube(dir / "g.hsg"); }), FormatErrorKind::kWrongContainer);

    spit(dir / "junk", "JUNKJUNKJUNKJUNK");
    EXPECT_EQ(kind_of([&] { load_cube(dir / "junk"); }), FormatErrorKind::kBadMagic);

    write_cube(dir / "c.hsc", HyperCube(2, 2, 2, std::vector<float>(8, 1.0f)));
    std::string bytes = slurp(dir / "c.hsc");
    spit(dir / "short.hsc", bytes.substr(0, bytes.size() - 3));
    try {
        load_cube(dir / "short.hsc");
        FAIL() << "expected truncation";
    } catch (const FormatError& e) {
        EXPECT_EQ(e.kind(), FormatErrorKind::kTruncated);
        EXPECT_NE(std::string(e.what()).find("expected 32 bytes, found 29"), std::string::npos) << e.what();
    }
    spit(dir / "long.hsc", bytes + "x");
    EXPECT_EQ(kind_of([&] { load_cube(dir / "long.hsc"); }), FormatErrorKind::kTrailingBytes);

    std::string nan_bytes = bytes;
    nan_bytes[16 + 4 * 5 + 2] = '\xc0';
    nan_bytes[16 + 4 * 5 + 3] = '\x7f';
    spit(dir / "nan.hsc", nan_bytes);
    EXPECT_EQ(kind_of([&] { load_cube(dir / "nan.hsc"); }), FormatErrorKind::kNonFinite);

    EXPECT_EQ(kind_of([&] { load_cube(dir / "missing.hsc"); }), FormatErrorKind::kIo);
}

TEST(CubeFile, HeaderOnlyRead) {
    TempDir dir;
    write_cube(dir / "c.hsc", HyperCube(3, 4, 5, std::vector<float>(60, 0.0f)));
    const auto h = read_cube_header(dir / "c.hsc");
    EXPECT_EQ(h.height, 3u);
    EXPECT_EQ(h.width, 4u);
    EXPECT_EQ(h.bands, 5u);
}

TEST(GroundTruthFile, RoundTripAndClassCount) {
    TempDir dir;
    const auto gt = blocks(2, 3, {0, 1, 2, 2, 0, 1});
    write_ground_truth(dir / "g.hsg", gt);
    const auto loaded = load_ground_truth(dir / "g.hsg");
    EXPECT_EQ(std::vector<std::uint16_t>(loaded.labels().begin(), loaded.labels().end()),
              std::vector<std::uint16_t>(gt.labels().begin(), gt.labels().end()));
    EXPECT_EQ(loaded.num_classes(), 2u);
    EXPECT_EQ(loaded.labeled_pixels(), (std::vector<std::size_t>{1, 2, 3, 5}));
    EXPECT_EQ(loaded.class_sizes(), (std::vector<std::size_t>{2, 2}));
}

TEST(GroundTruthFile, AllZeroIsValidButHasNoLabels) {
    TempDir dir;
    write_ground_truth(dir / "g.hsg", blocks(2, 2, {0, 0, 0, 0}));
    const auto gt = load_ground_truth(dir / "g.hsg");
    EXPECT_EQ(gt.num_classes(), 0u);
    EXPECT_THROW(gt.label_vector(), ValidationError);
    EXPECT_THROW(stratified_split(gt, 0.5, 1), ValidationError);
}

TEST(GroundTruthFile, WrongContainerAndLabelRange) {
    TempDir dir;
    write_cube(dir / "c.hsc", HyperCube(1, 1, 1, {1.0f}));
    EXPECT_EQ(kind_of([&] { load_ground_truth(dir / "c.hsc"); }), FormatErrorKind::kWrongContainer);
    const std::vector<std::int64_t> too_big{1, 65536};
    EXPECT_EQ(kind_of([&] { GroundTruth::from_values(1, 2, too_big); }), FormatErrorKind::kLabelRange);
    const std::vector<std::int64_t> ok{0, 65535};
    EXPECT_EQ(GroundTruth::from_values(1, 2, ok).num_classes(), 65535u);
}

TEST(StratifiedSplit, ExactDivision) {
    const auto gt = blocks(4, 5, std::vector<std::uint16_t>(20, 1));
    const auto split = stratified_split(gt, 0.5, 9);
    EXPECT_EQ(split.train_positions().size(), 10u);
    EXPECT_EQ(split.test_positions().size(), 10u);
}

TEST(StratifiedSplit, RoundHalfUpFor26Pixels) {
    // round(0.10 * 26) = round(2.6) = 3
    EXPECT_EQ(train_count(26, 0.10), 3u);
    EXPECT_EQ(train_count(25, 0.10), 3u);  // 2.5 rounds up
    EXPECT_EQ(train_count(5, 0.10), 1u);   // 0.5 rounds up
    EXPECT_EQ(train_count(2, 0.10), 1u);   // clamped to >= 1
    EXPECT_EQ(train_count(2, 0.90), 1u);   // clamped to <= size - 1
    std::vector<std::uint16_t> labels(26, 7);
    labels.insert(labels.end(), 4, 0);
    const auto split = stratified_split(blocks(5, 6, labels), 0.10, 3);
    EXPECT_EQ(split.train_positions().size(), 3u);
    EXPECT_EQ(split.test_positions().size(), 23u);
}

TEST(StratifiedSplit, DeterministicPerSeed) {
    const auto scene = generate_synthetic({.classes = 5, .height = 20, .width = 20, .seed = 2});
    const auto a = stratified_split(scene.gt, 0.25, 17);
    const auto b = stratified_split(scene.gt, 0.25, 17);
    const auto c = stratified_split(scene.gt, 0.25, 18);
    EXPECT_EQ(a.roles, b.roles);
    EXPECT_NE(a.roles, c.roles);
}

TEST(StratifiedSplit, SingletonClassGoesToTrainWithWarning) {
    const auto gt = blocks(1, 5, {1, 1, 1, 2, 0});
    const auto split = stratified_split(gt, 0.5, 1);
    ASSERT_EQ(split.roles.size(), 4u);
    EXPECT_EQ(split.roles[3], SplitRole::kTrain);
    ASSERT_EQ(split.warnings.size(), 1u);
    EXPECT_NE(split.warnings[0].find("class 2"), std::string::npos);
}

TEST(StratifiedSplit, RejectsBadFraction) {
    const auto gt = blocks(1, 2, {1, 2});
    EXPECT_THROW(stratified_split(gt, 0.0, 1), ValidationError);
    EXPECT_THROW(stratified_split(gt, 1.0, 1), ValidationError);
}

TEST(StratifiedSplit, PartitionProperty) {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const auto scene = generate_synthetic(
            {.informative = 1, .noise_bands = 0, .classes = static_cast<std::uint32_t>(2 + seed % 9),
             .height = static_cast<std::uint32_t>(7 + seed), .width = 13, .seed = seed});
        for (double f : {0.1, 0.25, 0.5}) {
            const auto split = stratified_split(scene.gt, f, seed * 31);
            const auto train = split.train_positions();
            const auto test = split.test_positions();
            EXPECT_EQ(train.size() + test.size(), scene.gt.labeled_pixels().size());
            std::set<std::size_t> all(train.begin(), train.end());
            all.insert(test.begin(), test.end());
            EXPECT_EQ(all.size(), scene.gt.labeled_pixels().size());

            const auto sizes = scene.gt.class_sizes();
            std::map<std::uint16_t, std::size_t> train_per_class;
            std::map<std::uint16_t, std::size_t> test_per_class;
            const auto g = scene.gt.label_vector();
            for (auto p : train) {
                ++train_per_class[g.labels[p]];
            }
            for (auto p : test) {
                ++test_per_class[g.labels[p]];
            }
            for (std::uint16_t c = 1; c <= sizes.size(); ++c) {
                EXPECT_EQ(train_per_class[c], train_count(sizes[c - 1], f));
                if (sizes[c - 1] >= 2) {
                    EXPECT_GE(train_per_class[c], 1u);
                    EXPECT_GE(test_per_class[c], 1u);
                }
            }
        }
    }
}

TEST(Synthetic, NoiselessInformativeBandCarriesFullLabelEntropy) {
    const auto scene = generate_synthetic({.informative = 1, .noise_bands = 0, .classes = 6, .noise_level = 0.0});
    const auto g = scene.gt.label_vector();
    const auto q = quantize_band(labeled_band_values(scene.cube, scene.gt, 0), 8);
    EXPECT_NEAR(mutual_information(g, q), entropy(g), 1e-12);
}

TEST(Synthetic, NoiseBandsCarryLittleInformation) {
    // 100 x 100 = 10^4 labeled pixels; checked over 20 seeds.
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const auto scene = generate_synthetic(
            {.informative = 0, .noise_bands = 1, .classes = 6, .height = 100, .width = 100, .seed = seed});
        const auto g = scene.gt.label_vector();
        const auto q = quantize_band(labeled_band_values(scene.cube, scene.gt, 0), 16);
        EXPECT_LT(mutual_information(g, q), 0.05) << "seed " << seed;
    }
}

TEST(Synthetic, DuplicatesAreExactCopies) {
    const auto scene = generate_synthetic({.informative = 3, .duplicate_of = {2, 0}, .noise_bands = 2});
    ASSERT_EQ(scene.cube.bands(), 7u);
    EXPECT_EQ(scene.origins[3].role, BandRole::kDuplicate);
    EXPECT_EQ(scene.origins[3].source, 2u);
    const auto src = quantize_band(labeled_band_values(scene.cube, scene.gt, 2));
    const auto dup = quantize_band(labeled_band_values(scene.cube, scene.gt, 3));
    EXPECT_EQ(src.values, dup.values);
    EXPECT_TRUE(std::ranges::equal(scene.cube.band(0), scene.cube.band(4)));
}

TEST(Synthetic, BalancedLabelsAndDeterminism) {
    const auto a = generate_synthetic({.classes = 6, .height = 64, .width = 64, .seed = 5});
    const auto b = generate_synthetic({.classes = 6, .height = 64, .width = 64, .seed = 5});
    EXPECT_TRUE(std::ranges::equal(a.cube.data(), b.cube.data()));
    const auto sizes = a.gt.class_sizes();
    const auto [lo, hi] = std::minmax_element(sizes.begin(), sizes.end());
    EXPECT_LE(*hi - *lo, 1u);
    const auto even = generate_synthetic({.classes = 4, .height = 8, .width = 8});
    for (auto s : even.gt.class_sizes()) {
        EXPECT_EQ(s, 16u);
    }
}

TEST(Synthetic, Validation) {
    EXPECT_THROW(generate_synthetic({.classes = 1}), ValidationError);
    EXPECT_THROW(generate_synthetic({.informative = 2, .duplicate_of = {2}}), ValidationError);
    const auto noise_only = generate_synthetic({.informative = 0, .noise_bands = 3});
    EXPECT_EQ(noise_only.cube.bands(), 3u);
}

TEST(HyperCube, RejectsInconsistentData) {
    EXPECT_THROW(HyperCube(2, 2, 2, std::vector<float>(7, 0.0f)), ValidationError);
    EXPECT_THROW(HyperCube(1, 1, 1, {std::numeric_limits<float>::infinity()}), ValidationError);
    EXPECT_THROW(GroundTruth(2, 2, {1, 2, 3}), ValidationError);
}
