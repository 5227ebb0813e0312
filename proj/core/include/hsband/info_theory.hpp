#pragma once

// Histogram estimators over discrete symbol vectors. All quantities are in
// bits and are computed over the supplied samples only; callers restrict the
// inputs to labeled pixels before building them.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace hsband {

inline constexpr std::uint32_t kDefaultLevels = 256;

// Negative round-off in H(G)+H(B)-H(G,B) smaller than this is clamped to 0.
inline constexpr double kClampTolerance = 1e-9;

/// One band discretized into `levels` equal-width bins over its own min/max.
struct QuantizedBand {
    std::vector<std::uint16_t> values;
    std::uint32_t levels = 0;
};

/// Class labels in 1..num_classes, one per labeled pixel.
struct LabelVector {
    std::vector<std::uint16_t> labels;
    std::uint32_t num_classes = 0;
};

/// Non-owning view of a discrete vector: every symbol is < alphabet.
struct DiscreteView {
    std::span<const std::uint16_t> symbols;
    std::uint32_t alphabet = 0;

    DiscreteView(std::span<const std::uint16_t> s, std::uint32_t a) : symbols(s), alphabet(a) {}
    DiscreteView(const QuantizedBand& band) : symbols(band.values), alphabet(band.levels) {}
    // Label 0 is never present, so the alphabet is indexed by raw class value.
    DiscreteView(const LabelVector& g) : symbols(g.labels), alphabet(g.num_classes + 1) {}

    std::size_t size() const { return symbols.size(); }
};

/// Checks the LabelVector invariants (no zero label, labels <= Nc, Nc >= 2).
void validate(const LabelVector& g);

/// Maps v to floor((v - min) / (max - min) * levels), clamped to levels - 1.
/// A constant band maps every sample to level 0.
QuantizedBand quantize_band(std::span<const float> values, std::uint32_t levels = kDefaultLevels);
QuantizedBand quantize_band(std::span<const double> values, std::uint32_t levels = kDefaultLevels);

/// Contingency table of two equally long discrete vectors, row-major
/// (rows indexed by the first vector's symbols).
class JointHistogram {
public:
    JointHistogram(DiscreteView a, DiscreteView b);

    std::uint32_t rows() const { return rows_; }
    std::uint32_t cols() const { return cols_; }
    std::uint64_t total() const { return total_; }
    std::uint64_t count(std::uint32_t row, std::uint32_t col) const {
        return counts_[static_cast<std::size_t>(row) * cols_ + col];
    }
    std::span<const std::uint64_t> counts() const { return counts_; }

    std::vector<std::uint64_t> row_marginal() const;
    std::vector<std::uint64_t> col_marginal() const;

    double entropy_rows() const;
    double entropy_cols() const;
    double joint_entropy() const;
    // Summed cell by cell as p log p / (p_row p_col), which stays accurate
    // when the dependence is weak.
    double mutual_information() const;

private:
    std::uint32_t rows_;
    std::uint32_t cols_;
    std::uint64_t total_ = 0;
    std::vector<std::uint64_t> counts_;
};

/// Shannon entropy in bits of a histogram; empty bins contribute nothing.
double entropy_from_counts(std::span<const std::uint64_t> counts, std::uint64_t total);

double entropy(DiscreteView x);

/// I(G;B) = H(G) + H(B) - H(G,B) from one pass over the joint histogram.
double mutual_information(DiscreteView g, DiscreteView b);

/// (H(G) + H(B)) / H(G,B); 1.0 when both inputs are constant.
/// Equals 2 for identical variables and 1 for independent ones.
double normalized_mi(DiscreteView g, DiscreteView b);

/// H(G|B) = H(G,B) - H(B), clamped at 0.
double conditional_entropy(DiscreteView g, DiscreteView b);

/// Fano-derived error-probability proxy (H(G) - I(G;B) - 1) / log2(Nc).
/// May be negative; only ever compared, never read as a probability.
double fano_pe_lower(const LabelVector& g, DiscreteView estimate);

/// Hellman-Raviv style upper bound H(G|B) / 2, reported alongside the
/// lower proxy but never used to accept or reject bands.
double fano_pe_upper(const LabelVector& g, DiscreteView estimate);

/// Collapses several discrete vectors into one vector of tuple ids
/// (first-seen order), so a band subset can be treated as one variable.
QuantizedBand joint_symbols(std::span<const QuantizedBand* const> parts);

}  // namespace hsband
