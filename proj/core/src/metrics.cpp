#include "hsband/metrics.hpp"

#include <string>

#include "hsband/errors.hpp"

namespace hsband {

ConfusionMatrix::ConfusionMatrix(std::uint32_t num_classes)
    : num_classes_(num_classes), counts_(static_cast<std::size_t>(num_classes) * num_classes, 0) {
    if (num_classes == 0) {
        throw ValidationError("confusion matrix needs at least one class");
    }
}

std::size_t ConfusionMatrix::index(std::uint32_t truth, std::uint32_t predicted) const {
    if (truth == 0 || truth > num_classes_ || predicted == 0 || predicted > num_classes_) {
        throw ValidationError("class pair (" + std::to_string(truth) + ", " + std::to_string(predicted) +
                              ") outside 1.." + std::to_string(num_classes_));
    }
    return static_cast<std::size_t>(truth - 1) * num_classes_ + (predicted - 1);
}

void ConfusionMatrix::add(std::uint32_t truth, std::uint32_t predicted, std::uint64_t n) {
    counts_[index(truth, predicted)] += n;
    total_ += n;
}

std::uint64_t ConfusionMatrix::row_sum(std::uint32_t truth) const {
    std::uint64_t s = 0;
    for (std::uint32_t p = 1; p <= num_classes_; ++p) {
        s += at(truth, p);
    }
    return s;
}

std::uint64_t ConfusionMatrix::col_sum(std::uint32_t predicted) const {
    std::uint64_t s = 0;
    for (std::uint32_t t = 1; t <= num_classes_; ++t) {
        s += at(t, predicted);
    }
    return s;
}

std::uint64_t ConfusionMatrix::trace() const {
    std::uint64_t s = 0;
    for (std::uint32_t c = 1; c <= num_classes_; ++c) {
        s += at(c, c);
    }
    return s;
}

ConfusionMatrix confusion(std::span<const std::uint16_t> truth, std::span<const std::uint16_t> predicted,
                          std::uint32_t num_classes) {
    if (truth.size() != predicted.size()) {
        throw ValidationError("confusion: length mismatch (" + std::to_string(truth.size()) + " vs " +
                              std::to_string(predicted.size()) + ")");
    }
    if (truth.empty()) {
        throw ValidationError("confusion: empty inputs");
    }
    ConfusionMatrix cm(num_classes);
    for (std::size_t i = 0; i < truth.size(); ++i) {
        cm.add(truth[i], predicted[i]);
    }
    return cm;
}

MetricsReport metrics_report(const ConfusionMatrix& cm) {
    if (cm.total() == 0) {
        throw ValidationError("metrics_report: confusion matrix is empty");
    }
    const std::uint32_t nc = cm.num_classes();
    const double total = static_cast<double>(cm.total());

    MetricsReport r;
    r.ica.resize(nc);
    double ica_sum = 0.0;
    std::size_t defined = 0;
    // Integer accumulation keeps p_e exact.
    std::uint64_t chance = 0;
    for (std::uint32_t c = 1; c <= nc; ++c) {
        const auto row = cm.row_sum(c);
        chance += row * cm.col_sum(c);
        if (row == 0) {
            continue;
        }
        const double acc = static_cast<double>(cm.at(c, c)) / static_cast<double>(row);
        r.ica[c - 1] = acc;
        ica_sum += acc;
        ++defined;
    }
    r.aa = ica_sum / static_cast<double>(defined);
    r.oa = static_cast<double>(cm.trace()) / total;
    const double pe = static_cast<double>(chance) / (total * total);
    if (pe < 1.0) {
        r.kappa = (r.oa - pe) / (1.0 - pe);
    }
    return r;
}

}  // namespace hsband
