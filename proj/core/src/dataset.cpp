#include "hsband/dataset.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <numeric>
#include <string>

#include "hsband/errors.hpp"
#include "hsband/random.hpp"

namespace hsband {

namespace {

constexpr std::array<char, 4> kCubeMagic = {'H', 'S', 'C', '1'};
constexpr std::array<char, 4> kGroundTruthMagic = {'H', 'S', 'G', '1'};
constexpr std::size_t kCubeHeaderBytes = 16;
constexpr std::size_t kGroundTruthHeaderBytes = 12;

void put_u16(std::string& out, std::uint16_t v) {
    out.push_back(static_cast<char>(v & 0xFF));
    out.push_back(static_cast<char>(v >> 8));
}

void put_u32(std::string& out, std::uint32_t v) {
    for (int s = 0; s < 32; s += 8) {
        out.push_back(static_cast<char>((v >> s) & 0xFF));
    }
}

std::uint16_t get_u16(const unsigned char* p) { return static_cast<std::uint16_t>(p[0] | (p[1] << 8)); }

std::uint32_t get_u32(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw FormatError(FormatErrorKind::kIo, "cannot open " + path.string());
    }
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw FormatError(FormatErrorKind::kIo, "cannot create " + path.string());
    }
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw FormatError(FormatErrorKind::kIo, "write failed for " + path.string());
    }
}

void check_magic(const std::string& bytes, const std::array<char, 4>& expected, const std::filesystem::path& path) {
    if (bytes.size() < 4) {
        throw FormatError(FormatErrorKind::kTruncated,
                          path.string() + ": truncated header (" + std::to_string(bytes.size()) + " bytes)");
    }
    if (std::equal(expected.begin(), expected.end(), bytes.begin())) {
        return;
    }
    const auto& other = expected == kCubeMagic ? kGroundTruthMagic : kCubeMagic;
    const std::string found = bytes.substr(0, 4);
    if (std::equal(other.begin(), other.end(), bytes.begin())) {
        throw FormatError(FormatErrorKind::kWrongContainer,
                          path.string() + ": wrong container type (found " + found + ", expected " +
                              std::string(expected.begin(), expected.end()) + ")");
    }
    throw FormatError(FormatErrorKind::kBadMagic, path.string() + ": bad magic");
}

void check_payload(std::size_t actual, std::size_t expected, const std::filesystem::path& path) {
    if (actual < expected) {
        throw FormatError(FormatErrorKind::kTruncated, path.string() + ": truncated payload, expected " +
                                                           std::to_string(expected) + " bytes, found " +
                                                           std::to_string(actual));
    }
    if (actual > expected) {
        throw FormatError(FormatErrorKind::kTrailingBytes, path.string() + ": " + std::to_string(actual - expected) +
                                                               " trailing bytes after payload");
    }
}

std::uint64_t checked_cells(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
    const std::uint64_t limit = std::uint64_t{1} << 40;
    if (a == 0 || b == 0 || c == 0 || a * b > limit || a * b * c > limit) {
        throw FormatError(FormatErrorKind::kBadDimensions, "invalid dimensions " + std::to_string(a) + "x" +
                                                               std::to_string(b) + "x" + std::to_string(c));
    }
    return a * b * c;
}

}  // namespace

HyperCube::HyperCube(std::uint32_t height, std::uint32_t width, std::uint32_t bands, std::vector<float> data)
    : height_(height), width_(width), bands_(bands), data_(std::move(data)) {
    if (data_.size() != static_cast<std::size_t>(height) * width * bands) {
        throw ValidationError("HyperCube: data length " + std::to_string(data_.size()) + " != " +
                              std::to_string(height) + "x" + std::to_string(width) + "x" + std::to_string(bands));
    }
    for (std::size_t i = 0; i < data_.size(); ++i) {
        if (!std::isfinite(data_[i])) {
            throw ValidationError("HyperCube: non-finite value at index " + std::to_string(i));
        }
    }
}

std::span<const float> HyperCube::band(std::size_t b) const {
    if (b >= bands_) {
        throw ValidationError("band " + std::to_string(b) + " out of range (cube has " + std::to_string(bands_) + ")");
    }
    return std::span<const float>(data_).subspan(b * pixels(), pixels());
}

GroundTruth::GroundTruth(std::uint32_t height, std::uint32_t width, std::vector<std::uint16_t> labels)
    : height_(height), width_(width), labels_(std::move(labels)) {
    if (labels_.size() != static_cast<std::size_t>(height) * width) {
        throw ValidationError("GroundTruth: label count " + std::to_string(labels_.size()) + " != " +
                              std::to_string(height) + "x" + std::to_string(width));
    }
    for (std::size_t i = 0; i < labels_.size(); ++i) {
        if (labels_[i] != 0) {
            labeled_.push_back(i);
            num_classes_ = std::max<std::uint32_t>(num_classes_, labels_[i]);
        }
    }
}

GroundTruth GroundTruth::from_values(std::uint32_t height, std::uint32_t width, std::span<const std::int64_t> values) {
    std::vector<std::uint16_t> labels(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (values[i] < 0 || values[i] > std::numeric_limits<std::uint16_t>::max()) {
            throw FormatError(FormatErrorKind::kLabelRange,
                              "label " + std::to_string(values[i]) + " at pixel " + std::to_string(i) +
                                  " outside 0..65535");
        }
        labels[i] = static_cast<std::uint16_t>(values[i]);
    }
    return GroundTruth(height, width, std::move(labels));
}

LabelVector GroundTruth::label_vector() const {
    if (labeled_.empty()) {
        throw ValidationError("ground truth has no labeled pixels");
    }
    LabelVector g;
    g.num_classes = num_classes_;
    g.labels.reserve(labeled_.size());
    for (auto p : labeled_) {
        g.labels.push_back(labels_[p]);
    }
    validate(g);
    return g;
}

std::vector<std::size_t> GroundTruth::class_sizes() const {
    std::vector<std::size_t> sizes(num_classes_, 0);
    for (auto p : labeled_) {
        ++sizes[labels_[p] - 1];
    }
    return sizes;
}

void write_cube(const std::filesystem::path& path, const HyperCube& cube) {
    std::string out;
    out.reserve(kCubeHeaderBytes + cube.data().size() * 4);
    out.append(kCubeMagic.begin(), kCubeMagic.end());
    put_u32(out, cube.height());
    put_u32(out, cube.width());
    put_u32(out, cube.bands());
    for (float v : cube.data()) {
        put_u32(out, std::bit_cast<std::uint32_t>(v));
    }
    write_file(path, out);
}

CubeHeader read_cube_header(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw FormatError(FormatErrorKind::kIo, "cannot open " + path.string());
    }
    std::string bytes(kCubeHeaderBytes, '\0');
    in.read(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    bytes.resize(static_cast<std::size_t>(in.gcount()));
    check_magic(bytes, kCubeMagic, path);
    if (bytes.size() < kCubeHeaderBytes) {
        throw FormatError(FormatErrorKind::kTruncated,
                          path.string() + ": truncated header (" + std::to_string(bytes.size()) + " bytes)");
    }
    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
    return {get_u32(p + 4), get_u32(p + 8), get_u32(p + 12)};
}

HyperCube load_cube(const std::filesystem::path& path) {
    const std::string bytes = read_file(path);
    check_magic(bytes, kCubeMagic, path);
    if (bytes.size() < kCubeHeaderBytes) {
        throw FormatError(FormatErrorKind::kTruncated,
                          path.string() + ": truncated header (" + std::to_string(bytes.size()) + " bytes)");
    }
    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
    const std::uint32_t h = get_u32(p + 4);
    const std::uint32_t w = get_u32(p + 8);
    const std::uint32_t b = get_u32(p + 12);
    const std::uint64_t cells = checked_cells(h, w, b);
    check_payload(bytes.size() - kCubeHeaderBytes, cells * 4, path);

    std::vector<float> data(cells);
    const unsigned char* payload = p + kCubeHeaderBytes;
    for (std::size_t i = 0; i < cells; ++i) {
        data[i] = std::bit_cast<float>(get_u32(payload + 4 * i));
        if (!std::isfinite(data[i])) {
            const std::size_t plane = static_cast<std::size_t>(h) * w;
            throw FormatError(FormatErrorKind::kNonFinite, path.string() + ": non-finite value in band " +
                                                               std::to_string(i / plane) + " at pixel " +
                                                               std::to_string(i % plane));
        }
    }
    return HyperCube(h, w, b, std::move(data));
}

void write_ground_truth(const std::filesystem::path& path, const GroundTruth& gt) {
    std::string out;
    out.reserve(kGroundTruthHeaderBytes + gt.pixels() * 2);
    out.append(kGroundTruthMagic.begin(), kGroundTruthMagic.end());
    put_u32(out, gt.height());
    put_u32(out, gt.width());
    for (auto l : gt.labels()) {
        put_u16(out, l);
    }
    write_file(path, out);
}

GroundTruth load_ground_truth(const std::filesystem::path& path) {
    const std::string bytes = read_file(path);
    check_magic(bytes, kGroundTruthMagic, path);
    if (bytes.size() < kGroundTruthHeaderBytes) {
        throw FormatError(FormatErrorKind::kTruncated,
                          path.string() + ": truncated header (" + std::to_string(bytes.size()) + " bytes)");
    }
    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
    const std::uint32_t h = get_u32(p + 4);
    const std::uint32_t w = get_u32(p + 8);
    const std::uint64_t cells = checked_cells(h, w, 1);
    check_payload(bytes.size() - kGroundTruthHeaderBytes, cells * 2, path);

    std::vector<std::uint16_t> labels(cells);
    const unsigned char* payload = p + kGroundTruthHeaderBytes;
    for (std::size_t i = 0; i < cells; ++i) {
        labels[i] = get_u16(payload + 2 * i);
    }
    return GroundTruth(h, w, std::move(labels));
}

void check_compatible(const HyperCube& cube, const GroundTruth& gt) {
    if (cube.height() != gt.height() || cube.width() != gt.width()) {
        throw ValidationError("cube is " + std::to_string(cube.height()) + "x" + std::to_string(cube.width()) +
                              " but ground truth is " + std::to_string(gt.height()) + "x" +
                              std::to_string(gt.width()));
    }
}

std::vector<float> labeled_band_values(const HyperCube& cube, const GroundTruth& gt, std::size_t band) {
    check_compatible(cube, gt);
    const auto raster = cube.band(band);
    std::vector<float> out;
    out.reserve(gt.labeled_pixels().size());
    for (auto p : gt.labeled_pixels()) {
        out.push_back(raster[p]);
    }
    return out;
}

std::vector<std::size_t> TrainTestSplit::train_positions() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < roles.size(); ++i) {
        if (roles[i] == SplitRole::kTrain) {
            out.push_back(i);
        }
    }
    return out;
}

std::vector<std::size_t> TrainTestSplit::test_positions() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < roles.size(); ++i) {
        if (roles[i] == SplitRole::kTest) {
            out.push_back(i);
        }
    }
    return out;
}

std::size_t train_count(std::size_t class_size, double fraction) {
    if (class_size <= 1) {
        return class_size;
    }
    // Round half up; the small bias keeps products like 0.1 * 25 from
    // landing just below the .5 boundary.
    const double raw = std::floor(fraction * static_cast<double>(class_size) + 0.5 + 1e-9);
    return std::clamp<std::size_t>(static_cast<std::size_t>(raw), 1, class_size - 1);
}

TrainTestSplit stratified_split(const GroundTruth& gt, double fraction, std::uint64_t seed) {
    if (!(fraction > 0.0 && fraction < 1.0)) {
        throw ValidationError("train fraction must be in (0, 1), got " + std::to_string(fraction));
    }
    const auto& labeled = gt.labeled_pixels();
    if (labeled.empty()) {
        throw ValidationError("ground truth has no labeled pixels");
    }
    std::vector<std::vector<std::size_t>> members(gt.num_classes());
    for (std::size_t pos = 0; pos < labeled.size(); ++pos) {
        members[gt.labels()[labeled[pos]] - 1].push_back(pos);
    }

    TrainTestSplit split;
    split.fraction = fraction;
    split.seed = seed;
    split.roles.assign(labeled.size(), SplitRole::kTest);
    Rng rng(seed);
    for (std::size_t c = 0; c < members.size(); ++c) {
        auto& m = members[c];
        if (m.empty()) {
            continue;
        }
        if (m.size() == 1) {
            split.warnings.push_back("class " + std::to_string(c + 1) +
                                     " has a single labeled pixel; assigned to train, no test pixel");
        }
        rng.shuffle(m.begin(), m.end());
        const std::size_t n_train = train_count(m.size(), fraction);
        for (std::size_t i = 0; i < n_train; ++i) {
            split.roles[m[i]] = SplitRole::kTrain;
        }
    }
    return split;
}

SyntheticScene generate_synthetic(const SyntheticSpec& spec) {
    if (spec.classes < 2) {
        throw ValidationError("synthetic scene needs at least 2 classes, got " + std::to_string(spec.classes));
    }
    if (spec.classes > std::numeric_limits<std::uint16_t>::max()) {
        throw ValidationError("too many classes for 16-bit labels");
    }
    if (spec.height == 0 || spec.width == 0) {
        throw ValidationError("synthetic scene needs non-zero dimensions");
    }
    const std::size_t pixels = static_cast<std::size_t>(spec.height) * spec.width;
    if (pixels < spec.classes) {
        throw ValidationError("synthetic scene has fewer pixels than classes");
    }
    if (!(spec.noise_level >= 0.0) || !std::isfinite(spec.noise_level)) {
        throw ValidationError("noise level must be finite and non-negative");
    }
    for (auto s : spec.duplicate_of) {
        if (s >= spec.informative) {
            throw ValidationError("duplicate source " + std::to_string(s) + " is not an informative band");
        }
    }

    std::vector<std::uint16_t> labels(pixels);
    for (std::size_t p = 0; p < pixels; ++p) {
        labels[p] = static_cast<std::uint16_t>(p * spec.classes / pixels + 1);
    }

    const auto bands =
        static_cast<std::uint32_t>(spec.informative + spec.duplicate_of.size() + spec.noise_bands);
    std::vector<float> data(pixels * bands);
    std::vector<BandOrigin> origins;
    origins.reserve(bands);
    Rng rng(spec.seed);

    std::vector<double> means(spec.classes);
    for (std::uint32_t k = 0; k < spec.informative; ++k) {
        std::iota(means.begin(), means.end(), 0.0);
        rng.shuffle(means.begin(), means.end());
        float* out = data.data() + static_cast<std::size_t>(k) * pixels;
        for (std::size_t p = 0; p < pixels; ++p) {
            const double noise = spec.noise_level > 0.0 ? spec.noise_level * rng.normal() : 0.0;
            out[p] = static_cast<float>(means[labels[p] - 1] + noise);
        }
        origins.push_back({BandRole::kInformative, k});
    }
    for (std::size_t d = 0; d < spec.duplicate_of.size(); ++d) {
        const std::size_t band = spec.informative + d;
        std::copy_n(data.data() + static_cast<std::size_t>(spec.duplicate_of[d]) * pixels, pixels,
                    data.data() + band * pixels);
        origins.push_back({BandRole::kDuplicate, spec.duplicate_of[d]});
    }
    for (std::uint32_t k = 0; k < spec.noise_bands; ++k) {
        const std::size_t band = spec.informative + spec.duplicate_of.size() + k;
        float* out = data.data() + band * pixels;
        for (std::size_t p = 0; p < pixels; ++p) {
            out[p] = static_cast<float>(rng.normal());
        }
        origins.push_back({BandRole::kNoise, 0});
    }

    return {HyperCube(spec.height, spec.width, bands, std::move(data)),
            GroundTruth(spec.height, spec.width, std::move(labels)), std::move(origins)};
}

}  // namespace hsband
