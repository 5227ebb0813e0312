#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace hsband {

/// Rows are true classes, columns predicted classes; class c lives at c - 1.
class ConfusionMatrix {
public:
    explicit ConfusionMatrix(std::uint32_t num_classes);

    std::uint32_t num_classes() const { return num_classes_; }
    std::uint64_t total() const { return total_; }
    std::uint64_t at(std::uint32_t truth, std::uint32_t predicted) const {
        return counts_[index(truth, predicted)];
    }
    void add(std::uint32_t truth, std::uint32_t predicted, std::uint64_t n = 1);

    std::uint64_t row_sum(std::uint32_t truth) const;
    std::uint64_t col_sum(std::uint32_t predicted) const;
    std::uint64_t trace() const;

private:
    std::size_t index(std::uint32_t truth, std::uint32_t predicted) const;

    std::uint32_t num_classes_;
    std::uint64_t total_ = 0;
    std::vector<std::uint64_t> counts_;
};

ConfusionMatrix confusion(std::span<const std::uint16_t> truth, std::span<const std::uint16_t> predicted,
                          std::uint32_t num_classes);

/// All values are ratios in [0, 1] (kappa may be negative). Classes without
/// test pixels have no ICA and are left out of AA; kappa is absent when the
/// chance agreement is 1.
struct MetricsReport {
    std::vector<std::optional<double>> ica;
    double aa = 0.0;
    double oa = 0.0;
    std::optional<double> kappa;
};

MetricsReport metrics_report(const ConfusionMatrix& cm);

}  // namespace hsband
