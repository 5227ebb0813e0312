#include "hsband/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <utility>

#include "hsband/errors.hpp"
#include "hsband/random.hpp"

namespace hsband {

SampleMatrix::SampleMatrix(std::size_t rows, std::size_t features)
    : rows_(rows), features_(features), data_(rows * features, 0.0) {}

SampleMatrix::SampleMatrix(std::size_t rows, std::size_t features, std::vector<double> data)
    : rows_(rows), features_(features), data_(std::move(data)) {
    if (data_.size() != rows * features) {
        throw ValidationError("SampleMatrix: data length " + std::to_string(data_.size()) + " != " +
                              std::to_string(rows) + "x" + std::to_string(features));
    }
    for (std::size_t i = 0; i < data_.size(); ++i) {
        if (!std::isfinite(data_[i])) {
            throw ValidationError("SampleMatrix: non-finite value at row " + std::to_string(i / features) +
                                  ", feature " + std::to_string(i % features));
        }
    }
}

SampleMatrix SampleMatrix::select_rows(std::span<const std::size_t> indices) const {
    SampleMatrix out(indices.size(), features_);
    for (std::size_t i = 0; i < indices.size(); ++i) {
        const auto src = row(indices[i]);
        std::copy(src.begin(), src.end(), out.row(i).begin());
    }
    return out;
}

double TrainConfig::resolved_gamma(std::size_t features) const {
    if (gamma) {
        return *gamma;
    }
    return 1.0 / static_cast<double>(std::max<std::size_t>(features, 1));
}

void TrainConfig::validate() const {
    if (!(c > 0.0)) {
        throw ValidationError("SVM C must be positive");
    }
    if (gamma && !(*gamma > 0.0)) {
        throw ValidationError("RBF gamma must be positive");
    }
    if (!(tol > 0.0)) {
        throw ValidationError("SMO tolerance must be positive");
    }
    if (max_passes < 1 || max_sweeps < 1) {
        throw ValidationError("SMO max_passes and max_sweeps must be at least 1");
    }
}

Standardizer Standardizer::fit(const SampleMatrix& x) {
    if (x.rows() == 0) {
        throw ValidationError("Standardizer: no samples");
    }
    const std::size_t f = x.features();
    Standardizer s;
    s.mean.assign(f, 0.0);
    s.stddev.assign(f, 0.0);
    for (std::size_t i = 0; i < x.rows(); ++i) {
        for (std::size_t k = 0; k < f; ++k) {
            s.mean[k] += x(i, k);
        }
    }
    const double n = static_cast<double>(x.rows());
    for (auto& m : s.mean) {
        m /= n;
    }
    for (std::size_t i = 0; i < x.rows(); ++i) {
        for (std::size_t k = 0; k < f; ++k) {
            const double d = x(i, k) - s.mean[k];
            s.stddev[k] += d * d;
        }
    }
    for (auto& sd : s.stddev) {
        sd = std::sqrt(sd / n);
        if (!(sd > 0.0)) {
            sd = 1.0;
        }
    }
    return s;
}

SampleMatrix Standardizer::apply(const SampleMatrix& x) const {
    if (x.features() != mean.size()) {
        throw ValidationError("Standardizer: expected " + std::to_string(mean.size()) + " features, got " +
                              std::to_string(x.features()));
    }
    SampleMatrix z(x.rows(), x.features());
    for (std::size_t i = 0; i < x.rows(); ++i) {
        for (std::size_t k = 0; k < x.features(); ++k) {
            z(i, k) = (x(i, k) - mean[k]) / stddev[k];
        }
    }
    return z;
}

SampleMatrix Standardizer::invert(const SampleMatrix& z) const {
    if (z.features() != mean.size()) {
        throw ValidationError("Standardizer: expected " + std::to_string(mean.size()) + " features, got " +
                              std::to_string(z.features()));
    }
    SampleMatrix x(z.rows(), z.features());
    for (std::size_t i = 0; i < z.rows(); ++i) {
        for (std::size_t k = 0; k < z.features(); ++k) {
            x(i, k) = z(i, k) * stddev[k] + mean[k];
        }
    }
    return x;
}

double rbf_kernel(std::span<const double> a, std::span<const double> b, double gamma) {
    double d2 = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        const double d = a[k] - b[k];
        d2 += d * d;
    }
    return std::exp(-gamma * d2);
}

double BinaryMachine::decision(std::span<const double> x) const {
    if (support_vectors.rows() > 0 && x.size() != support_vectors.features()) {
        throw ValidationError("decision: feature count mismatch");
    }
    double f = bias;
    for (std::size_t k = 0; k < coef.size(); ++k) {
        f += coef[k] * rbf_kernel(support_vectors.row(k), x, gamma);
    }
    return f;
}

namespace {

// Kernel rows for one SMO problem: either a cached Gram matrix or rows
// computed on demand into scratch buffers.
class KernelRows {
public:
    KernelRows(const SampleMatrix& x, double gamma, std::size_t cache_limit)
        : x_(x), gamma_(gamma), n_(x.rows()), cached_(n_ <= cache_limit) {
        if (cached_) {
            gram_.resize(n_ * n_);
            for (std::size_t i = 0; i < n_; ++i) {
                gram_[i * n_ + i] = 1.0;
                for (std::size_t j = i + 1; j < n_; ++j) {
                    const double k = rbf_kernel(x_.row(i), x_.row(j), gamma_);
                    gram_[i * n_ + j] = k;
                    gram_[j * n_ + i] = k;
                }
            }
        } else {
            scratch_[0].resize(n_);
            scratch_[1].resize(n_);
        }
    }

    // slot selects one of two scratch buffers so two rows can be live at once.
    std::span<const double> row(std::size_t i, int slot) {
        if (cached_) {
            return {gram_.data() + i * n_, n_};
        }
        auto& buf = scratch_[slot];
        for (std::size_t j = 0; j < n_; ++j) {
            buf[j] = j == i ? 1.0 : rbf_kernel(x_.row(i), x_.row(j), gamma_);
        }
        return buf;
    }

private:
    const SampleMatrix& x_;
    double gamma_;
    std::size_t n_;
    bool cached_;
    std::vector<double> gram_;
    std::vector<double> scratch_[2];
};

constexpr double kAlphaStep = 1e-5;

double violation(double alpha, double c, int y, double err) {
    const double r = y * err;
    double v = 0.0;
    if (alpha < c) {
        v = std::max(v, -r);
    }
    if (alpha > 0.0) {
        v = std::max(v, r);
    }
    return v;
}

// Round-off residue next to a box bound would otherwise leave a "support
// vector" with a zero-size multiplier that no pair update can remove.
double snap(double a, double c) {
    const double eps = 1e-12 * c;
    if (a < eps) {
        return 0.0;
    }
    if (a > c - eps) {
        return c;
    }
    return a;
}

}  // namespace

BinaryMachine train_binary_smo(const SampleMatrix& x, std::span<const int> y, const TrainConfig& cfg) {
    cfg.validate();
    const std::size_t n = x.rows();
    if (y.size() != n) {
        throw ValidationError("train_binary_smo: " + std::to_string(y.size()) + " labels for " + std::to_string(n) +
                              " samples");
    }
    if (x.features() == 0) {
        throw ValidationError("train_binary_smo: no features");
    }
    bool has_pos = false;
    bool has_neg = false;
    for (int v : y) {
        if (v == 1) {
            has_pos = true;
        } else if (v == -1) {
            has_neg = true;
        } else {
            throw ValidationError("train_binary_smo: labels must be +1 or -1");
        }
    }
    if (!has_pos || !has_neg) {
        throw ValidationError("train_binary_smo: both classes must be present");
    }

    const double c = cfg.c;
    const double gamma = cfg.resolved_gamma(x.features());
    KernelRows kernel(x, gamma, cfg.gram_cache_limit);
    std::vector<double> alpha(n, 0.0);
    std::vector<double> err(n);
    for (std::size_t i = 0; i < n; ++i) {
        err[i] = -y[i];
    }
    double b = 0.0;
    Rng rng(cfg.seed);

    // Joint update of (i, j); false when the pair cannot make progress.
    auto take_step = [&](std::size_t i, std::size_t j, std::span<const double> ki) {
        const double ai_old = alpha[i];
        const double aj_old = alpha[j];
        double lo;
        double hi;
        if (y[i] != y[j]) {
            lo = std::max(0.0, aj_old - ai_old);
            hi = std::min(c, c + aj_old - ai_old);
        } else {
            lo = std::max(0.0, ai_old + aj_old - c);
            hi = std::min(c, ai_old + aj_old);
        }
        if (lo >= hi) {
            return false;
        }
        const double kij = ki[j];
        const double eta = 2.0 * kij - 2.0;  // K_ii = K_jj = 1 for RBF
        if (eta >= 0.0) {
            return false;
        }
        double aj = aj_old - y[j] * (err[i] - err[j]) / eta;
        aj = std::clamp(aj, lo, hi);
        if (std::abs(aj - aj_old) < kAlphaStep) {
            return false;
        }
        aj = snap(aj, c);
        const double ai = snap(ai_old + y[i] * y[j] * (aj_old - aj), c);
        const double dai = ai - ai_old;
        const double daj = aj - aj_old;

        const double b1 = b - err[i] - y[i] * dai - y[j] * daj * kij;
        const double b2 = b - err[j] - y[i] * dai * kij - y[j] * daj;
        double b_new;
        if (ai > 0.0 && ai < c) {
            b_new = b1;
        } else if (aj > 0.0 && aj < c) {
            b_new = b2;
        } else {
            b_new = 0.5 * (b1 + b2);
        }

        const auto kj = kernel.row(j, 1);
        const double di = y[i] * dai;
        const double dj = y[j] * daj;
        const double db = b_new - b;
        for (std::size_t k = 0; k < n; ++k) {
            err[k] += di * ki[k] + dj * kj[k] + db;
        }
        alpha[i] = ai;
        alpha[j] = aj;
        b = b_new;
        return true;
    };

    std::uint32_t passes = 0;
    std::uint32_t sweeps = 0;
    while (passes < cfg.max_passes && sweeps < cfg.max_sweeps) {
        std::size_t changed = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (violation(alpha[i], c, y[i], err[i]) <= cfg.tol) {
                continue;
            }
            const auto ki = kernel.row(i, 0);
            std::size_t j = rng.below(n - 1);
            if (j >= i) {
                ++j;
            }
            bool stepped = take_step(i, j, ki);
            // The random partner can be useless near convergence; walk the
            // remaining candidates from there before giving up on i.
            for (std::size_t t = 1; !stepped && t < n; ++t) {
                const std::size_t jj = (j + t) % n;
                if (jj != i) {
                    stepped = take_step(i, jj, ki);
                }
            }
            changed += stepped;
        }
        ++sweeps;
        passes = changed == 0 ? passes + 1 : 0;
    }

    BinaryMachine m;
    m.gamma = gamma;
    m.c = c;
    m.bias = b;
    m.sweeps = sweeps;
    std::vector<std::size_t> sv;
    for (std::size_t i = 0; i < n; ++i) {
        if (alpha[i] > 0.0) {
            sv.push_back(i);
        }
    }
    m.support_vectors = x.select_rows(sv);
    m.support_index = sv;
    m.coef.reserve(sv.size());
    for (auto i : sv) {
        m.coef.push_back(alpha[i] * y[i]);
    }
    double worst = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        worst = std::max(worst, violation(alpha[i], c, y[i], err[i]));
    }
    m.converged = sweeps < cfg.max_sweeps && worst <= cfg.tol;
    return m;
}

double kkt_violation(const BinaryMachine& machine, const SampleMatrix& x, std::span<const int> y) {
    std::vector<double> alpha(x.rows(), 0.0);
    for (std::size_t k = 0; k < machine.support_index.size(); ++k) {
        alpha.at(machine.support_index[k]) = std::abs(machine.coef[k]);
    }
    double worst = 0.0;
    for (std::size_t i = 0; i < x.rows(); ++i) {
        const double err = machine.decision(x.row(i)) - y[i];
        worst = std::max(worst, violation(alpha[i], machine.c, y[i], err));
    }
    return worst;
}

bool SvmModel::converged() const {
    return std::all_of(machines.begin(), machines.end(), [](const PairMachine& p) { return p.machine.converged; });
}

SvmModel train_multiclass(const SampleMatrix& x, std::span<const std::uint16_t> labels, std::uint32_t num_classes,
                          const TrainConfig& cfg) {
    cfg.validate();
    if (labels.size() != x.rows()) {
        throw ValidationError("train_multiclass: " + std::to_string(labels.size()) + " labels for " +
                              std::to_string(x.rows()) + " samples");
    }
    if (num_classes < 2) {
        throw ValidationError("train_multiclass: need at least 2 classes");
    }
    if (x.features() == 0) {
        throw ValidationError("train_multiclass: no features");
    }
    std::vector<std::vector<std::size_t>> members(num_classes);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] == 0 || labels[i] > num_classes) {
            throw ValidationError("train_multiclass: label " + std::to_string(labels[i]) + " outside 1.." +
                                  std::to_string(num_classes));
        }
        members[labels[i] - 1].push_back(i);
    }
    for (std::uint32_t c = 0; c < num_classes; ++c) {
        if (members[c].empty()) {
            throw ValidationError("train_multiclass: class " + std::to_string(c + 1) + " has no training samples");
        }
    }

    SvmModel model;
    model.num_classes = num_classes;
    model.features = x.features();
    model.gamma = cfg.resolved_gamma(x.features());
    model.c = cfg.c;
    model.scaler = Standardizer::fit(x);
    const SampleMatrix z = model.scaler.apply(x);

    TrainConfig pair_cfg = cfg;
    pair_cfg.gamma = model.gamma;
    std::uint64_t pair_index = 0;
    for (std::uint32_t a = 1; a <= num_classes; ++a) {
        for (std::uint32_t b = a + 1; b <= num_classes; ++b) {
            std::vector<std::size_t> rows = members[a - 1];
            rows.insert(rows.end(), members[b - 1].begin(), members[b - 1].end());
            std::vector<int> y;
            y.reserve(rows.size());
            for (auto r : rows) {
                y.push_back(labels[r] == a ? 1 : -1);
            }
            pair_cfg.seed = cfg.seed + pair_index++;
            PairMachine pm;
            pm.positive = static_cast<std::uint16_t>(a);
            pm.negative = static_cast<std::uint16_t>(b);
            pm.machine = train_binary_smo(z.select_rows(rows), y, pair_cfg);
            for (auto& idx : pm.machine.support_index) {
                idx = rows[idx];
            }
            model.machines.push_back(std::move(pm));
        }
    }

    std::vector<std::size_t> slot(x.rows(), 0);
    std::vector<std::size_t> used;
    for (const auto& pm : model.machines) {
        used.insert(used.end(), pm.machine.support_index.begin(), pm.machine.support_index.end());
    }
    std::sort(used.begin(), used.end());
    used.erase(std::unique(used.begin(), used.end()), used.end());
    for (std::size_t s = 0; s < used.size(); ++s) {
        slot[used[s]] = s;
    }
    model.support = z.select_rows(used);
    for (auto& pm : model.machines) {
        pm.shared.reserve(pm.machine.support_index.size());
        for (auto idx : pm.machine.support_index) {
            pm.shared.push_back(slot[idx]);
        }
    }
    return model;
}

std::size_t argmax_smallest(std::span<const std::uint32_t> counts) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < counts.size(); ++i) {
        if (counts[i] > counts[best]) {
            best = i;
        }
    }
    return best;
}

std::vector<std::uint16_t> predict(const SvmModel& model, const SampleMatrix& x) {
    if (x.features() != model.features) {
        throw ValidationError("predict: model expects " + std::to_string(model.features) + " features, got " +
                              std::to_string(x.features()));
    }
    const SampleMatrix z = model.scaler.apply(x);
    const bool use_shared =
        model.support.rows() > 0 && std::all_of(model.machines.begin(), model.machines.end(), [](const PairMachine& p) {
            return p.shared.size() == p.machine.coef.size();
        });
    std::vector<std::uint16_t> out(x.rows());
    std::vector<std::uint32_t> votes(model.num_classes);
    std::vector<double> kvals(model.support.rows());
    for (std::size_t i = 0; i < z.rows(); ++i) {
        std::fill(votes.begin(), votes.end(), 0);
        if (use_shared) {
            for (std::size_t s = 0; s < kvals.size(); ++s) {
                kvals[s] = rbf_kernel(model.support.row(s), z.row(i), model.gamma);
            }
        }
        for (const auto& pm : model.machines) {
            double f;
            if (use_shared) {
                // Same term order as BinaryMachine::decision.
                f = pm.machine.bias;
                for (std::size_t k = 0; k < pm.shared.size(); ++k) {
                    f += pm.machine.coef[k] * kvals[pm.shared[k]];
                }
            } else {
                f = pm.machine.decision(z.row(i));
            }
            const auto winner = f > 0.0 ? pm.positive : pm.negative;
            ++votes[winner - 1];
        }
        out[i] = static_cast<std::uint16_t>(argmax_smallest(votes) + 1);
    }
    return out;
}

std::vector<std::uint16_t> knn_classify(const SampleMatrix& train_x, std::span<const std::uint16_t> train_y,
                                        const SampleMatrix& test_x, std::size_t k) {
    if (train_x.rows() == 0) {
        throw ValidationError("knn_classify: empty training set");
    }
    if (train_y.size() != train_x.rows()) {
        throw ValidationError("knn_classify: label count does not match training rows");
    }
    if (k == 0 || k > train_x.rows()) {
        throw ValidationError("knn_classify: k must be in [1, " + std::to_string(train_x.rows()) + "]");
    }
    if (test_x.rows() > 0 && test_x.features() != train_x.features()) {
        throw ValidationError("knn_classify: feature count mismatch");
    }
    const std::uint16_t max_label = *std::max_element(train_y.begin(), train_y.end());
    const std::size_t n = train_x.rows();
    const std::size_t f = train_x.features();
    const double* train = train_x.data().data();

    std::vector<std::uint16_t> out(test_x.rows());
    std::vector<std::pair<double, std::size_t>> dist(n);
    std::vector<std::uint32_t> votes(static_cast<std::size_t>(max_label) + 1);
    for (std::size_t t = 0; t < test_x.rows(); ++t) {
        const auto q = test_x.row(t);
        for (std::size_t i = 0; i < n; ++i) {
            const double* r = train + i * f;
            double d2 = 0.0;
            for (std::size_t c = 0; c < f; ++c) {
                const double d = r[c] - q[c];
                d2 += d * d;
            }
            dist[i] = {d2, i};
        }
        if (k < n) {
            std::nth_element(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k - 1), dist.end());
        }
        std::fill(votes.begin(), votes.end(), 0);
        // After nth_element the first k entries are exactly the k smallest
        // (distance, index) pairs.
        for (std::size_t i = 0; i < k; ++i) {
            ++votes[train_y[dist[i].second]];
        }
        out[t] = static_cast<std::uint16_t>(argmax_smallest(votes));
    }
    return out;
}

InductionResult fit_predict(const SampleMatrix& train_x, std::span<const std::uint16_t> train_y,
                            std::uint32_t num_classes, const SampleMatrix& test_x, const InductionConfig& cfg) {
    InductionResult r;
    if (cfg.kind == InductionKind::kKnn) {
        const std::size_t k = std::min(cfg.knn_k, train_x.rows());
        r.predicted = knn_classify(train_x, train_y, test_x, k);
        return r;
    }
    const SvmModel model = train_multiclass(train_x, train_y, num_classes, cfg.svm);
    r.predicted = predict(model, test_x);
    r.converged = model.converged();
    return r;
}

GridSearchResult grid_search(const SampleMatrix& x, std::span<const std::uint16_t> labels, std::uint32_t num_classes,
                             const TrainConfig& base, std::size_t folds, std::uint64_t seed) {
    if (folds < 2) {
        throw ValidationError("grid_search: need at least 2 folds");
    }
    if (labels.size() != x.rows()) {
        throw ValidationError("grid_search: label count does not match rows");
    }
    std::vector<std::vector<std::size_t>> members(num_classes);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] == 0 || labels[i] > num_classes) {
            throw ValidationError("grid_search: label outside 1.." + std::to_string(num_classes));
        }
        members[labels[i] - 1].push_back(i);
    }
    // Singleton classes stay in every training fold.
    constexpr std::size_t kAlwaysTrain = static_cast<std::size_t>(-1);
    std::vector<std::size_t> fold_of(x.rows(), kAlwaysTrain);
    Rng rng(seed);
    for (auto& m : members) {
        if (m.size() < 2) {
            continue;
        }
        rng.shuffle(m.begin(), m.end());
        for (std::size_t i = 0; i < m.size(); ++i) {
            fold_of[m[i]] = i % folds;
        }
    }

    GridSearchResult result;
    result.best_accuracy = -1.0;
    for (double c : kGridC) {
        for (double gamma : kGridGamma) {
            TrainConfig cfg = base;
            cfg.c = c;
            cfg.gamma = gamma;
            std::size_t correct = 0;
            std::size_t evaluated = 0;
            for (std::size_t f = 0; f < folds; ++f) {
                std::vector<std::size_t> train_rows;
                std::vector<std::size_t> test_rows;
                for (std::size_t i = 0; i < x.rows(); ++i) {
                    (fold_of[i] == f ? test_rows : train_rows).push_back(i);
                }
                if (test_rows.empty()) {
                    continue;
                }
                std::vector<std::uint16_t> train_y;
                train_y.reserve(train_rows.size());
                for (auto r : train_rows) {
                    train_y.push_back(labels[r]);
                }
                const SvmModel model = train_multiclass(x.select_rows(train_rows), train_y, num_classes, cfg);
                const auto pred = predict(model, x.select_rows(test_rows));
                for (std::size_t i = 0; i < test_rows.size(); ++i) {
                    correct += pred[i] == labels[test_rows[i]];
                }
                evaluated += test_rows.size();
            }
            const double acc = evaluated ? static_cast<double>(correct) / static_cast<double>(evaluated) : 0.0;
            result.table.push_back({c, gamma, acc});
            if (acc > result.best_accuracy) {
                result.best_accuracy = acc;
                result.best_c = c;
                result.best_gamma = gamma;
            }
        }
    }
    return result;
}

}  // namespace hsband
