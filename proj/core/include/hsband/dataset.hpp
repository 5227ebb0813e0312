#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "hsband/info_theory.hpp"

namespace hsband {

/// H x W x B reflectance raster stored band-sequential: band-major, then
/// row-major within each band.
class HyperCube {
public:
    HyperCube() = default;
    HyperCube(std::uint32_t height, std::uint32_t width, std::uint32_t bands, std::vector<float> data);

    std::uint32_t height() const { return height_; }
    std::uint32_t width() const { return width_; }
    std::uint32_t bands() const { return bands_; }
    std::size_t pixels() const { return static_cast<std::size_t>(height_) * width_; }

    std::span<const float> data() const { return data_; }
    std::span<const float> band(std::size_t b) const;
    float at(std::size_t b, std::size_t pixel) const { return data_[b * pixels() + pixel]; }

private:
    std::uint32_t height_ = 0;
    std::uint32_t width_ = 0;
    std::uint32_t bands_ = 0;
    std::vector<float> data_;
};

/// Row-major class raster; 0 marks unlabeled pixels.
class GroundTruth {
public:
    GroundTruth() = default;
    GroundTruth(std::uint32_t height, std::uint32_t width, std::vector<std::uint16_t> labels);

    // Rejects negative values and values above 65535.
    static GroundTruth from_values(std::uint32_t height, std::uint32_t width, std::span<const std::int64_t> values);

    std::uint32_t height() const { return height_; }
    std::uint32_t width() const { return width_; }
    std::size_t pixels() const { return labels_.size(); }
    std::span<const std::uint16_t> labels() const { return labels_; }

    // Largest present label; 0 when nothing is labeled.
    std::uint32_t num_classes() const { return num_classes_; }

    // Raster indices of labeled pixels in row-major order. Every per-pixel
    // vector in the library ("labeled order") is aligned with this list.
    const std::vector<std::size_t>& labeled_pixels() const { return labeled_; }

    // Labeled pixels only; throws when nothing is labeled or Nc < 2.
    LabelVector label_vector() const;

    std::vector<std::size_t> class_sizes() const;  // index c - 1

private:
    std::uint32_t height_ = 0;
    std::uint32_t width_ = 0;
    std::uint32_t num_classes_ = 0;
    std::vector<std::uint16_t> labels_;
    std::vector<std::size_t> labeled_;
};

struct CubeHeader {
    std::uint32_t height = 0;
    std::uint32_t width = 0;
    std::uint32_t bands = 0;
};

// HSC1: "HSC1" + u32 height, width, bands + f32 payload, all little-endian.
// HSG1: "HSG1" + u32 height, width + u16 labels, all little-endian.
void write_cube(const std::filesystem::path& path, const HyperCube& cube);
HyperCube load_cube(const std::filesystem::path& path);
CubeHeader read_cube_header(const std::filesystem::path& path);

void write_ground_truth(const std::filesystem::path& path, const GroundTruth& gt);
GroundTruth load_ground_truth(const std::filesystem::path& path);

/// Band-restricted pixel values in labeled order.
std::vector<float> labeled_band_values(const HyperCube& cube, const GroundTruth& gt, std::size_t band);

void check_compatible(const HyperCube& cube, const GroundTruth& gt);

enum class SplitRole : std::uint8_t { kTrain, kTest };

/// Stratified train/test assignment over labeled pixels (labeled order).
struct TrainTestSplit {
    double fraction = 0.0;
    std::uint64_t seed = 0;
    std::vector<SplitRole> roles;
    std::vector<std::string> warnings;

    std::vector<std::size_t> train_positions() const;
    std::vector<std::size_t> test_positions() const;
};

/// Per class: round-half-up(fraction * size) pixels, clamped to
/// [1, size - 1], drawn without replacement. A singleton class goes to
/// train with a warning.
TrainTestSplit stratified_split(const GroundTruth& gt, double fraction, std::uint64_t seed);

/// Number of training pixels for a class of `class_size` pixels.
std::size_t train_count(std::size_t class_size, double fraction);

struct SyntheticSpec {
    std::uint32_t informative = 5;
    // Each entry adds a band that exactly copies informative band `source`.
    std::vector<std::uint32_t> duplicate_of;
    std::uint32_t noise_bands = 20;
    std::uint32_t classes = 6;
    std::uint32_t height = 64;
    std::uint32_t width = 64;
    double noise_level = 1.0;
    std::uint64_t seed = 1;
};

enum class BandRole : std::uint8_t { kInformative, kDuplicate, kNoise };

struct BandOrigin {
    BandRole role = BandRole::kNoise;
    std::uint32_t source = 0;  // source informative band for duplicates
};

struct SyntheticScene {
    HyperCube cube;
    GroundTruth gt;
    std::vector<BandOrigin> origins;  // one per band
};

/// Band layout: informative bands first, then duplicates, then noise.
/// Labels are contiguous row-major stripes balanced to within one pixel.
/// Informative band k takes value perm_k(class) + noise_level * N(0, 1)
/// where perm_k is a per-band random permutation of 0..classes-1; noise
/// bands are N(0, 1) independent of the labels.
SyntheticScene generate_synthetic(const SyntheticSpec& spec);

}  // namespace hsband
