#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <vector>

#include "hsband/errors.hpp"
#include "hsband/selection.hpp"

using namespace hsband;

namespace {

// Square raster with `classes` equal stripes, every pixel labeled.
GroundTruth striped_truth(std::uint32_t side, std::uint32_t classes) {
    std::vector<std::uint16_t> labels(side * side);
    for (std::size_t p = 0; p < labels.size(); ++p) {
        labels[p] = static_cast<std::uint16_t>(p * classes / labels.size() + 1);
    }
    return {side, side, labels};
}

HyperCube stack(std::uint32_t h, std::uint32_t w, const std::vector<std::vector<float>>& bands) {
    std::vector<float> data;
    for (const auto& b : bands) {
        data.insert(data.end(), b.begin(), b.end());
    }
    return {h, w, static_cast<std::uint32_t>(bands.size()), data};
}

SelectionConfig knn_config(std::size_t l, double th) {
    SelectionConfig cfg;
    cfg.target_count = l;
    cfg.threshold = th;
    cfg.induction.kind = InductionKind::kKnn;
    cfg.induction.knn_k = 5;
    return cfg;
}

std::set<std::size_t> as_set(const std::vector<std::size_t>& v) { return {v.begin(), v.end()}; }

std::set<std::size_t> range_set(std::size_t n) {
    std::set<std::size_t> s;
    for (std::size_t i = 0; i < n; ++i) {
        s.insert(i);
    }
    return s;
}

}  // namespace

TEST(Ranking, InformativeFirstConstantLast) {
    const auto gt = striped_truth(16, 4);
    std::mt19937 rng(3);
    std::normal_distribution<float> n(0.0F, 1.0F);
    std::vector<float> constant(256, 2.5F);
    std::vector<float> informative(256);
    std::vector<float> noise(256);
    for (std::size_t p = 0; p < 256; ++p) {
        informative[p] = static_cast<float>(gt.labels()[p]) + 0.05F * n(rng);
        noise[p] = n(rng);
    }
    const auto cube = stack(16, 16, {constant, noise, informative});
    const auto ranked = rank_bands_by_relevance(cube, gt, knn_config(1, 0.0));
    ASSERT_EQ(ranked.size(), 3u);
    EXPECT_EQ(ranked[0].band, 2u);
    EXPECT_EQ(ranked[2].band, 0u);
    // A constant band adds nothing: NMI = H(G) / H(G) exactly.
    EXPECT_EQ(ranked[2].score, 1.0);
}

TEST(Ranking, IdenticalScoresKeepBandOrder) {
    const auto gt = striped_truth(8, 2);
    std::vector<float> v(64);
    for (std::size_t p = 0; p < 64; ++p) {
        v[p] = static_cast<float>(p % 7);
    }
    const auto cube = stack(8, 8, {v, v, v});
    for (auto rel : {Relevance::kNmi, Relevance::kMi}) {
        auto cfg = knn_config(1, 0.0);
        cfg.relevance = rel;
        const auto ranked = rank_bands_by_relevance(cube, gt, cfg);
        EXPECT_EQ(ranked[0].band, 0u);
        EXPECT_EQ(ranked[1].band, 1u);
        EXPECT_EQ(ranked[2].band, 2u);
    }
}

TEST(Ranking, ExcludedBandsAreSkipped) {
    const auto scene = generate_synthetic({.informative = 2, .noise_bands = 2, .classes = 3, .height = 12,
                                           .width = 12});
    auto cfg = knn_config(1, 0.0);
    cfg.excluded_bands = {0, 3};
    const auto ranked = rank_bands_by_relevance(scene.cube, scene.gt, cfg);
    ASSERT_EQ(ranked.size(), 2u);
    EXPECT_EQ(ranked[0].band, 1u);
    EXPECT_EQ(ranked[1].band, 2u);
}

TEST(Wnmipe, RecoversInformativeBandsWithKnn) {
    const auto scene = generate_synthetic({.duplicate_of = {0, 1, 2, 3, 4}, .seed = 5});
    const auto r = wnmipe_select(scene.cube, scene.gt, knn_config(5, 0.001));
    EXPECT_EQ(as_set(r.bands), range_set(5));
    EXPECT_TRUE(trace_invariants_hold(r.trace, 0.001, 5));
}

TEST(Wnmipe, RecoversInformativeBandsWithSvm) {
    const auto scene = generate_synthetic({.informative = 3, .noise_bands = 4, .classes = 4, .height = 20,
                                           .width = 20, .noise_level = 0.4, .seed = 2});
    SelectionConfig cfg;
    cfg.target_count = 3;
    cfg.threshold = 0.001;
    const auto r = wnmipe_select(scene.cube, scene.gt, cfg);
    EXPECT_EQ(as_set(r.bands), range_set(3));
    EXPECT_TRUE(trace_invariants_hold(r.trace, 0.001, 3));
}

TEST(Wnmipe, DuplicateOfAcceptedBandIsRejected) {
    const auto scene = generate_synthetic({.informative = 2, .duplicate_of = {0}, .noise_bands = 0, .classes = 4,
                                           .height = 16, .width = 16, .noise_level = 0.3});
    const auto r = wnmipe_select(scene.cube, scene.gt, knn_config(3, 0.0));
    ASSERT_EQ(r.trace.steps.size(), 3u);
    for (const auto& s : r.trace.steps) {
        const bool is_copy = s.band == 2 || s.band == 0;
        if (is_copy && s.decision == Decision::kRejected) {
            EXPECT_EQ(s.pe, s.pe_star);
        }
    }
    EXPECT_FALSE(as_set(r.bands).count(0) && as_set(r.bands).count(2));
    EXPECT_FALSE(r.trace.warnings.empty());
}

TEST(Wnmipe, DuplicateLeavesEstimateUnchanged) {
    const auto scene = generate_synthetic({.informative = 2, .duplicate_of = {1}, .noise_bands = 1, .classes = 3,
                                           .height = 12, .width = 12, .noise_level = 0.8});
    for (auto kind : {InductionKind::kKnn, InductionKind::kSvm}) {
        auto cfg = knn_config(2, 0.0);
        cfg.induction.kind = kind;
        const auto base = estimate_ground_truth(scene.cube, scene.gt, {0, 1}, cfg);
        const auto with_copy = estimate_ground_truth(scene.cube, scene.gt, {0, 1, 2}, cfg);
        EXPECT_EQ(base.labels, with_copy.labels);
    }
}

TEST(Wnmipe, SingleBandRequest) {
    const auto scene = generate_synthetic({.informative = 3, .noise_bands = 3, .classes = 3, .height = 12,
                                           .width = 12});
    const auto cfg = knn_config(1, 0.0);
    const auto r = wnmipe_select(scene.cube, scene.gt, cfg);
    ASSERT_EQ(r.bands.size(), 1u);
    ASSERT_EQ(r.trace.steps.size(), 1u);
    EXPECT_EQ(r.bands[0], rank_bands_by_relevance(scene.cube, scene.gt, cfg).front().band);
}

TEST(Wnmipe, NoiseOnlySceneKeepsInvariants) {
    for (std::uint64_t seed = 1; seed <= 4; ++seed) {
        const auto scene = generate_synthetic({.informative = 0, .noise_bands = 8, .classes = 3, .height = 16,
                                               .width = 16, .seed = seed});
        const auto r = wnmipe_select(scene.cube, scene.gt, knn_config(4, 0.001));
        EXPECT_TRUE(trace_invariants_hold(r.trace, 0.001, 4));
        EXPECT_EQ(r.trace.accepted(), r.bands);
        EXPECT_GE(r.bands.size(), 1u);
        EXPECT_LE(r.bands.size(), 4u);
        if (r.bands.size() < 4) {
            EXPECT_FALSE(r.trace.warnings.empty());
        }
    }
}

TEST(Wnmipe, Deterministic) {
    const auto scene = generate_synthetic({.informative = 3, .noise_bands = 5, .classes = 4, .height = 16,
                                           .width = 16, .seed = 9});
    SelectionConfig cfg;
    cfg.target_count = 4;
    const auto a = wnmipe_select(scene.cube, scene.gt, cfg);
    const auto b = wnmipe_select(scene.cube, scene.gt, cfg);
    EXPECT_EQ(a.bands, b.bands);
    ASSERT_EQ(a.trace.steps.size(), b.trace.steps.size());
    for (std::size_t i = 0; i < a.trace.steps.size(); ++i) {
        EXPECT_EQ(a.trace.steps[i].pe, b.trace.steps[i].pe);
    }
}

TEST(Wmif, MatchesWnmipeWhenBandEntropiesAreEqual) {
    // Every band is a rearrangement of the same values, so H(B) is shared and
    // NMI is increasing in MI.
    const std::uint32_t side = 16;
    const auto gt = striped_truth(side, 4);
    const std::size_t n = side * side;
    std::mt19937 rng(11);
    std::vector<std::vector<float>> bands;
    for (int b = 0; b < 8; ++b) {
        std::normal_distribution<double> noise(0.0, 0.3 + 0.5 * b);
        std::vector<double> key(n);
        for (std::size_t p = 0; p < n; ++p) {
            key[p] = gt.labels()[p] + noise(rng);
        }
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return key[x] < key[y]; });
        std::vector<float> band(n);
        for (std::size_t r = 0; r < n; ++r) {
            band[order[r]] = static_cast<float>(r);
        }
        bands.push_back(band);
    }
    const auto cube = stack(side, side, bands);
    auto cfg = knn_config(4, 0.0);
    cfg.relevance = Relevance::kNmi;
    const auto by_nmi = rank_bands_by_relevance(cube, gt, cfg);
    cfg.relevance = Relevance::kMi;
    const auto by_mi = rank_bands_by_relevance(cube, gt, cfg);
    for (std::size_t i = 0; i < by_mi.size(); ++i) {
        EXPECT_EQ(by_nmi[i].band, by_mi[i].band);
    }
    EXPECT_EQ(wnmipe_select(cube, gt, cfg).bands, wmif_select(cube, gt, cfg).bands);
}

TEST(PeModes, EachModeRecoversInformativeBands) {
    const auto scene = generate_synthetic({.informative = 2, .noise_bands = 6, .classes = 4, .height = 20,
                                           .width = 20, .noise_level = 0.3, .seed = 4});
    for (auto mode : {PeMode::kFanoPrediction, PeMode::kFanoBands, PeMode::kEmpiricalError}) {
        auto cfg = knn_config(2, 0.0);
        cfg.pe_mode = mode;
        const auto r = wnmipe_select(scene.cube, scene.gt, cfg);
        EXPECT_EQ(as_set(r.bands), range_set(2)) << static_cast<int>(mode);
        EXPECT_TRUE(trace_invariants_hold(r.trace, 0.0, 2));
    }
}

TEST(Mrmr, HandOracle) {
    // 4 classes x 4 pixels. A is the high bit of (class - 1); C is the low bit
    // with one flipped pixel per class. I(G;A) = 1, I(G;C) = 1 - h(1/4),
    // I(A;C) = 0, so after A the copy of A scores 1 - 1 = 0 and C scores 0.19.
    std::vector<std::uint16_t> labels;
    std::vector<float> a;
    std::vector<float> c;
    for (std::uint16_t cls = 1; cls <= 4; ++cls) {
        for (int i = 0; i < 4; ++i) {
            labels.push_back(cls);
            a.push_back(static_cast<float>((cls - 1) >> 1));
            const int low = (cls - 1) & 1;
            c.push_back(static_cast<float>(i == 0 ? 1 - low : low));
        }
    }
    const GroundTruth gt(4, 4, labels);
    const auto cube = stack(4, 4, {c, a, a});
    auto cfg = knn_config(2, 0.0);
    const auto bands = mrmr_select(cube, gt, cfg);
    EXPECT_EQ(bands, (std::vector<std::size_t>{1, 0}));

    cfg.relevance = Relevance::kMi;
    const auto ranked = rank_bands_by_relevance(cube, gt, cfg);
    const double h_quarter = -(0.25 * std::log2(0.25) + 0.75 * std::log2(0.75));
    EXPECT_NEAR(ranked[0].score, 1.0, 1e-12);
    EXPECT_NEAR(ranked[2].score, 1.0 - h_quarter, 1e-12);
}

TEST(Mrmr, AlwaysReturnsRequestedCount) {
    const auto scene = generate_synthetic({.informative = 0, .noise_bands = 6, .classes = 3, .height = 10,
                                           .width = 10});
    for (std::size_t l = 1; l <= 6; ++l) {
        const auto bands = mrmr_select(scene.cube, scene.gt, knn_config(l, 0.0));
        EXPECT_EQ(bands.size(), l);
        EXPECT_EQ(as_set(bands).size(), l);
    }
}

TEST(EstimateGroundTruth, LabelBandIsReproducedExactly) {
    const auto gt = striped_truth(10, 5);
    std::vector<float> band(100);
    for (std::size_t p = 0; p < 100; ++p) {
        band[p] = static_cast<float>(gt.labels()[p]);
    }
    const auto cube = stack(10, 10, {band});
    for (auto kind : {InductionKind::kKnn, InductionKind::kSvm}) {
        auto cfg = knn_config(1, 0.0);
        cfg.induction.kind = kind;
        const auto est = estimate_ground_truth(cube, gt, {0}, cfg);
        EXPECT_EQ(est.labels, gt.label_vector().labels);
        EXPECT_EQ(est.num_classes, 5u);
    }
}

TEST(EstimateGroundTruth, EmptyBandListThrows) {
    const auto scene = generate_synthetic({.informative = 1, .noise_bands = 1, .classes = 2, .height = 6,
                                           .width = 6});
    EXPECT_THROW(estimate_ground_truth(scene.cube, scene.gt, {}, knn_config(1, 0.0)), ValidationError);
}

TEST(Selection, MidRunFailureCarriesPartialTrace) {
    // Three 256-level noise bands over 90000 pixels have more distinct
    // tuples than the joint alphabet can hold, so the third step fails.
    const auto scene = generate_synthetic({.informative = 0, .noise_bands = 3, .classes = 4, .height = 300,
                                           .width = 300});
    auto cfg = knn_config(3, 0.0);
    cfg.pe_mode = PeMode::kFanoBands;
    try {
        wnmipe_select(scene.cube, scene.gt, cfg);
        FAIL() << "expected SelectionAborted";
    } catch (const SelectionAborted& e) {
        ASSERT_EQ(e.trace().steps.size(), 2u);
        EXPECT_EQ(e.trace().steps[1].decision, Decision::kAccepted);
        EXPECT_TRUE(trace_invariants_hold(e.trace(), 0.0, 3));
    }
}

TEST(Selection, ConfigValidation) {
    const auto scene = generate_synthetic({.informative = 2, .noise_bands = 2, .classes = 2, .height = 6,
                                           .width = 6});
    auto too_many = knn_config(5, 0.0);
    EXPECT_THROW(wnmipe_select(scene.cube, scene.gt, too_many), ValidationError);
    auto excluded = knn_config(3, 0.0);
    excluded.excluded_bands = {1, 2};
    EXPECT_THROW(wnmipe_select(scene.cube, scene.gt, excluded), ValidationError);
    auto out_of_range = knn_config(1, 0.0);
    out_of_range.excluded_bands = {4};
    EXPECT_THROW(mrmr_select(scene.cube, scene.gt, out_of_range), ValidationError);
    auto negative = knn_config(1, -0.5);
    EXPECT_THROW(wnmipe_select(scene.cube, scene.gt, negative), ValidationError);
    auto zero = knn_config(0, 0.0);
    EXPECT_THROW(wnmipe_select(scene.cube, scene.gt, zero), ValidationError);
    auto fraction = knn_config(1, 0.0);
    fraction.train_fraction = 1.0;
    EXPECT_THROW(wnmipe_select(scene.cube, scene.gt, fraction), ValidationError);
}

TEST(TraceInvariants, DetectsViolations) {
    using D = Decision;
    const SelectionTrace good{{{3, 1.2, 0.5, D::kAccepted, 0.5}, {1, 1.1, 0.5, D::kRejected, 0.5},
                               {2, 1.0, 0.3, D::kAccepted, 0.3}},
                              {}};
    EXPECT_TRUE(trace_invariants_hold(good, 0.1, 2));
    EXPECT_FALSE(trace_invariants_hold(good, 0.1, 1));
    EXPECT_FALSE(trace_invariants_hold(good, 0.2, 2));

    const SelectionTrace repeated{{{3, 1.2, 0.5, D::kAccepted, 0.5}, {3, 1.1, 0.4, D::kAccepted, 0.4}}, {}};
    EXPECT_FALSE(trace_invariants_hold(repeated, 0.0, 2));

    const SelectionTrace equal_pe{{{3, 1.2, 0.5, D::kAccepted, 0.5}, {1, 1.1, 0.5, D::kAccepted, 0.5}}, {}};
    EXPECT_FALSE(trace_invariants_hold(equal_pe, 0.0, 2));

    const SelectionTrace stale_star{{{3, 1.2, 0.5, D::kAccepted, 0.5}, {1, 1.1, 0.4, D::kAccepted, 0.5}}, {}};
    EXPECT_FALSE(trace_invariants_hold(stale_star, 0.0, 2));
}

TEST(TraceInvariants, HoldAcrossRandomScenes) {
    std::mt19937 rng(23);
    for (int trial = 0; trial < 12; ++trial) {
        SyntheticSpec spec;
        spec.informative = rng() % 4;
        spec.noise_bands = 2 + rng() % 5;
        spec.classes = 2 + rng() % 4;
        spec.height = 10;
        spec.width = 10;
        spec.noise_level = 0.2 + 0.2 * (rng() % 5);
        spec.seed = rng();
        const auto scene = generate_synthetic(spec);
        const std::size_t total = spec.informative + spec.noise_bands;
        const double th = (rng() % 3) * 0.01;
        auto cfg = knn_config(1 + rng() % total, th);
        cfg.split_seed = rng();
        const auto r = wnmipe_select(scene.cube, scene.gt, cfg);
        EXPECT_TRUE(trace_invariants_hold(r.trace, th, cfg.target_count)) << "trial " << trial;
        EXPECT_EQ(r.trace.accepted(), r.bands);
    }
}

TEST(Wnmipe, NoNoiseBandAcceptedAtZeroThreshold) {
    const auto scene = generate_synthetic({.informative = 5, .noise_bands = 20, .seed = 12});
    const auto r = wnmipe_select(scene.cube, scene.gt, knn_config(5, 0.0));
    for (auto b : r.bands) {
        EXPECT_LT(b, 5u) << "noise band " << b << " accepted";
    }
    EXPECT_TRUE(trace_invariants_hold(r.trace, 0.0, 5));
}

TEST(EstimateGroundTruth, InformativeScene) {
    const auto scene = generate_synthetic({.informative = 5, .noise_bands = 0, .seed = 3});
    const auto est = estimate_ground_truth(scene.cube, scene.gt, {0, 1, 2, 3, 4}, knn_config(5, 0.0));
    const auto truth = scene.gt.label_vector();
    std::size_t hit = 0;
    for (std::size_t i = 0; i < truth.labels.size(); ++i) {
        hit += est.labels[i] == truth.labels[i];
    }
    EXPECT_GE(static_cast<double>(hit) / static_cast<double>(truth.labels.size()), 0.90);
}

TEST(Selection, SingleBandSelectorsAgreeOnTheTopBand) {
    const auto scene = generate_synthetic({.informative = 3, .noise_bands = 4, .classes = 4, .height = 16,
                                           .width = 16, .noise_level = 0.5, .seed = 6});
    auto cfg = knn_config(1, 0.0);
    cfg.relevance = Relevance::kNmi;
    const auto nmi_top = rank_bands_by_relevance(scene.cube, scene.gt, cfg).front().band;
    cfg.relevance = Relevance::kMi;
    const auto mi_top = rank_bands_by_relevance(scene.cube, scene.gt, cfg).front().band;
    const auto wmif = wmif_select(scene.cube, scene.gt, cfg);
    EXPECT_EQ(wmif.bands, (std::vector<std::size_t>{mi_top}));
    EXPECT_EQ(mrmr_select(scene.cube, scene.gt, cfg), (std::vector<std::size_t>{mi_top}));
    if (nmi_top == mi_top) {
        EXPECT_EQ(wnmipe_select(scene.cube, scene.gt, cfg).bands, wmif.bands);
    }
}

TEST(Wmif, NoiseOnlyTraceRecordsEveryCandidate) {
    const auto scene = generate_synthetic({.informative = 0, .noise_bands = 10, .classes = 3, .height = 16,
                                           .width = 16, .seed = 8});
    const auto r = wmif_select(scene.cube, scene.gt, knn_config(3, 0.0));
    EXPECT_TRUE(trace_invariants_hold(r.trace, 0.0, 3));
    std::size_t rejected = 0;
    for (const auto& s : r.trace.steps) {
        rejected += s.decision == Decision::kRejected;
    }
    EXPECT_EQ(rejected + r.bands.size(), r.trace.steps.size());
    if (r.bands.size() < 3) {
        EXPECT_EQ(r.trace.steps.size(), 10u);
    }
}
