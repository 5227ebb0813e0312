#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace hsband {

/// Row-major samples x features matrix.
class SampleMatrix {
public:
    SampleMatrix() = default;
    SampleMatrix(std::size_t rows, std::size_t features);
    SampleMatrix(std::size_t rows, std::size_t features, std::vector<double> data);

    std::size_t rows() const { return rows_; }
    std::size_t features() const { return features_; }
    std::span<const double> data() const { return data_; }

    std::span<const double> row(std::size_t i) const { return {data_.data() + i * features_, features_}; }
    std::span<double> row(std::size_t i) { return {data_.data() + i * features_, features_}; }
    double& operator()(std::size_t i, std::size_t f) { return data_[i * features_ + f]; }
    double operator()(std::size_t i, std::size_t f) const { return data_[i * features_ + f]; }

    SampleMatrix select_rows(std::span<const std::size_t> indices) const;

private:
    std::size_t rows_ = 0;
    std::size_t features_ = 0;
    std::vector<double> data_;
};

struct TrainConfig {
    double c = 100.0;
    // Unset means 1 / number of features.
    std::optional<double> gamma;
    double tol = 1e-3;
    // Consecutive sweeps without a multiplier update before stopping.
    std::uint32_t max_passes = 5;
    // Hard cap on sweeps; hitting it clears BinaryMachine::converged.
    std::uint32_t max_sweeps = 20000;
    std::uint64_t seed = 1;
    // Full Gram matrix is cached per machine up to this many samples;
    // larger problems evaluate kernel rows on demand.
    std::size_t gram_cache_limit = 3000;

    double resolved_gamma(std::size_t features) const;
    void validate() const;
};

/// Per-feature z-score statistics; zero-variance features use divisor 1.
struct Standardizer {
    std::vector<double> mean;
    std::vector<double> stddev;

    static Standardizer fit(const SampleMatrix& x);
    SampleMatrix apply(const SampleMatrix& x) const;
    SampleMatrix invert(const SampleMatrix& z) const;
};

double rbf_kernel(std::span<const double> a, std::span<const double> b, double gamma);

/// Decision function sum_k coef_k * K(sv_k, x) + bias with coef_k = alpha_k * y_k.
struct BinaryMachine {
    SampleMatrix support_vectors;
    std::vector<double> coef;
    // Training-row index of each support vector.
    std::vector<std::size_t> support_index;
    double bias = 0.0;
    double gamma = 1.0;
    double c = 1.0;
    bool converged = true;
    std::uint32_t sweeps = 0;

    double decision(std::span<const double> x) const;
    // +1 when the decision value is strictly positive, else -1.
    int predict(std::span<const double> x) const { return decision(x) > 0.0 ? 1 : -1; }
};

/// Simplified SMO: every KKT violator i is paired with a uniformly random
/// j != i drawn from a generator seeded by cfg.seed. Labels must be +1/-1.
BinaryMachine train_binary_smo(const SampleMatrix& x, std::span<const int> y, const TrainConfig& cfg);

/// Largest KKT violation of a trained machine on its training set (0 when
/// every multiplier satisfies its margin condition within tolerance).
double kkt_violation(const BinaryMachine& machine, const SampleMatrix& x, std::span<const int> y);

struct PairMachine {
    std::uint16_t positive = 0;  // class voted for when decision > 0
    std::uint16_t negative = 0;
    BinaryMachine machine;
    // Row of each support vector in SvmModel::support (empty for hand-built models).
    std::vector<std::size_t> shared;
};

/// One-vs-one ensemble over classes 1..num_classes; features are
/// standardized with training statistics before every kernel evaluation.
struct SvmModel {
    std::uint32_t num_classes = 0;
    std::size_t features = 0;
    double gamma = 1.0;
    double c = 1.0;
    Standardizer scaler;
    std::vector<PairMachine> machines;
    // Standardized training rows that are support vectors of any machine;
    // prediction evaluates each kernel value once per sample against it.
    SampleMatrix support;

    bool converged() const;
};

SvmModel train_multiclass(const SampleMatrix& x, std::span<const std::uint16_t> labels, std::uint32_t num_classes,
                          const TrainConfig& cfg);

/// Majority vote over all pair machines; ties go to the smallest class.
std::vector<std::uint16_t> predict(const SvmModel& model, const SampleMatrix& x);

/// Index of the largest count; ties resolve to the smallest index.
std::size_t argmax_smallest(std::span<const std::uint32_t> counts);

/// Majority label among the k nearest training rows (Euclidean distance,
/// equal distances ordered by training index); vote ties go to the
/// smallest class.
std::vector<std::uint16_t> knn_classify(const SampleMatrix& train_x, std::span<const std::uint16_t> train_y,
                                        const SampleMatrix& test_x, std::size_t k);

enum class InductionKind { kSvm, kKnn };

/// The classifier run inside wrappers and by the CLI.
struct InductionConfig {
    InductionKind kind = InductionKind::kSvm;
    TrainConfig svm;
    std::size_t knn_k = 5;
};

struct InductionResult {
    std::vector<std::uint16_t> predicted;
    bool converged = true;
};

InductionResult fit_predict(const SampleMatrix& train_x, std::span<const std::uint16_t> train_y,
                            std::uint32_t num_classes, const SampleMatrix& test_x, const InductionConfig& cfg);

struct GridPoint {
    double c = 0.0;
    double gamma = 0.0;
    double accuracy = 0.0;
};

struct GridSearchResult {
    double best_c = 0.0;
    double best_gamma = 0.0;
    double best_accuracy = 0.0;
    std::vector<GridPoint> table;
};

inline constexpr double kGridC[] = {1.0, 10.0, 100.0, 1000.0};
inline constexpr double kGridGamma[] = {0.01, 0.1, 1.0, 10.0};

/// Stratified k-fold cross-validated search over kGridC x kGridGamma.
/// Ties keep the earlier grid point (C outer, gamma inner).
GridSearchResult grid_search(const SampleMatrix& x, std::span<const std::uint16_t> labels,
                             std::uint32_t num_classes, const TrainConfig& base, std::size_t folds = 5,
                             std::uint64_t seed = 1);

}  // namespace hsband
