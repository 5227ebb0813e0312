#include "hsband/selection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <string>

#include "hsband/errors.hpp"
#include "hsband/metrics.hpp"

namespace hsband {

namespace {

// Everything the wrapper needs that does not change between candidates.
class WrapperContext {
public:
    WrapperContext(const HyperCube& cube, const GroundTruth& gt, const SelectionConfig& cfg)
        : cube_(cube), gt_(gt), cfg_(cfg) {
        check_compatible(cube, gt);
        g_ = gt.label_vector();
        split_ = stratified_split(gt, cfg.train_fraction, cfg.split_seed);
        train_ = split_.train_positions();
        train_y_.reserve(train_.size());
        for (auto pos : train_) {
            train_y_.push_back(g_.labels[pos]);
        }
    }

    const LabelVector& labels() const { return g_; }
    const TrainTestSplit& split() const { return split_; }

    // Features for all labeled pixels; a band equal (over labeled pixels) to an
    // earlier band in the list adds no column.
    SampleMatrix features(const std::vector<std::size_t>& bands) const {
        std::vector<std::vector<float>> columns;
        for (auto b : bands) {
            auto values = labeled_band_values(cube_, gt_, b);
            const bool duplicate = std::any_of(columns.begin(), columns.end(),
                                               [&](const std::vector<float>& c) { return c == values; });
            if (!duplicate) {
                columns.push_back(std::move(values));
            }
        }
        const std::size_t n = g_.labels.size();
        SampleMatrix x(n, columns.size());
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t k = 0; k < columns.size(); ++k) {
                x(i, k) = columns[k][i];
            }
        }
        return x;
    }

    InductionResult estimate(const std::vector<std::size_t>& bands) const {
        if (bands.empty()) {
            throw ValidationError("estimate_ground_truth: empty band list");
        }
        const SampleMatrix all = features(bands);
        const SampleMatrix train_x = all.select_rows(train_);
        return fit_predict(train_x, train_y_, g_.num_classes, all, cfg_.induction);
    }

private:
    const HyperCube& cube_;
    const GroundTruth& gt_;
    const SelectionConfig& cfg_;
    LabelVector g_;
    TrainTestSplit split_;
    std::vector<std::size_t> train_;
    std::vector<std::uint16_t> train_y_;
};

struct RankedBands {
    std::vector<BandScore> order;
    std::vector<QuantizedBand> quantized;  // indexed by band; empty for excluded bands
};

RankedBands rank_impl(const HyperCube& cube, const GroundTruth& gt, const SelectionConfig& cfg, Relevance relevance) {
    check_compatible(cube, gt);
    const LabelVector g = gt.label_vector();
    std::set<std::size_t> excluded(cfg.excluded_bands.begin(), cfg.excluded_bands.end());

    RankedBands r;
    r.quantized.resize(cube.bands());
    for (std::size_t b = 0; b < cube.bands(); ++b) {
        if (excluded.count(b)) {
            continue;
        }
        r.quantized[b] = quantize_band(labeled_band_values(cube, gt, b), cfg.levels);
        const double score = relevance == Relevance::kNmi ? normalized_mi(g, r.quantized[b])
                                                          : mutual_information(g, r.quantized[b]);
        r.order.push_back({b, score});
    }
    std::stable_sort(r.order.begin(), r.order.end(),
                     [](const BandScore& a, const BandScore& b) { return a.score > b.score; });
    return r;
}

double agreement(const LabelVector& truth, const std::vector<std::uint16_t>& predicted) {
    const auto cm = confusion(truth.labels, predicted, truth.num_classes);
    return static_cast<double>(cm.trace()) / static_cast<double>(cm.total());
}

std::string describe(PeMode mode) {
    switch (mode) {
        case PeMode::kFanoPrediction:
            return "fano-prediction";
        case PeMode::kFanoBands:
            return "fano-bands";
        case PeMode::kEmpiricalError:
            return "empirical-error";
    }
    return "unknown";
}

}  // namespace

void SelectionConfig::validate(std::size_t total_bands) const {
    std::set<std::size_t> excluded;
    for (auto b : excluded_bands) {
        if (b >= total_bands) {
            throw ValidationError("excluded band " + std::to_string(b) + " out of range (cube has " +
                                  std::to_string(total_bands) + " bands)");
        }
        excluded.insert(b);
    }
    const std::size_t available = total_bands - excluded.size();
    if (target_count < 1 || target_count > available) {
        throw ValidationError("target band count " + std::to_string(target_count) + " must be in [1, " +
                              std::to_string(available) + "]");
    }
    if (!(threshold >= 0.0) || !std::isfinite(threshold)) {
        throw ValidationError("threshold must be finite and non-negative");
    }
    if (levels < 2 || levels > 65536) {
        throw ValidationError("levels must be in [2, 65536]");
    }
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw ValidationError("train fraction must be in (0, 1)");
    }
    if (induction.kind == InductionKind::kSvm) {
        induction.svm.validate();
    } else if (induction.knn_k < 1) {
        throw ValidationError("k-NN needs k >= 1");
    }
}

std::vector<std::size_t> SelectionTrace::accepted() const {
    std::vector<std::size_t> out;
    for (const auto& s : steps) {
        if (s.decision == Decision::kAccepted) {
            out.push_back(s.band);
        }
    }
    return out;
}

std::vector<BandScore> rank_bands_by_relevance(const HyperCube& cube, const GroundTruth& gt,
                                               const SelectionConfig& cfg) {
    cfg.validate(cube.bands());
    return rank_impl(cube, gt, cfg, cfg.relevance).order;
}

LabelVector estimate_ground_truth(const HyperCube& cube, const GroundTruth& gt, const std::vector<std::size_t>& bands,
                                  const SelectionConfig& cfg) {
    const WrapperContext ctx(cube, gt, cfg);
    return {ctx.estimate(bands).predicted, ctx.labels().num_classes};
}

SelectionResult wrapper_select(const HyperCube& cube, const GroundTruth& gt, const SelectionConfig& cfg) {
    cfg.validate(cube.bands());
    const RankedBands ranked = rank_impl(cube, gt, cfg, cfg.relevance);
    const WrapperContext ctx(cube, gt, cfg);
    const LabelVector& g = ctx.labels();

    SelectionResult result;
    auto& trace = result.trace;
    trace.warnings = ctx.split().warnings;

    auto pe_of = [&](const std::vector<std::size_t>& bands) -> double {
        try {
            if (cfg.pe_mode == PeMode::kFanoBands) {
                std::vector<const QuantizedBand*> parts;
                for (auto b : bands) {
                    parts.push_back(&ranked.quantized[b]);
                }
                return fano_pe_lower(g, joint_symbols(parts));
            }
            InductionResult est = ctx.estimate(bands);
            if (!est.converged) {
                trace.warnings.push_back("SVM did not converge while evaluating step " +
                                         std::to_string(trace.steps.size() + 1));
            }
            if (cfg.pe_mode == PeMode::kEmpiricalError) {
                return 1.0 - agreement(g, est.predicted);
            }
            return fano_pe_lower(g, LabelVector{std::move(est.predicted), g.num_classes});
        } catch (const std::exception& e) {
            throw SelectionAborted(std::string("PE evaluation failed after ") + std::to_string(trace.steps.size()) +
                                       " steps: " + e.what(),
                                   trace);
        }
    };

    const BandScore& seed = ranked.order.front();
    result.bands.push_back(seed.band);
    double pe_star = pe_of(result.bands);
    trace.steps.push_back({seed.band, seed.score, pe_star, Decision::kAccepted, pe_star});

    for (std::size_t r = 1; r < ranked.order.size() && result.bands.size() < cfg.target_count; ++r) {
        const BandScore& cand = ranked.order[r];
        std::vector<std::size_t> trial = result.bands;
        trial.push_back(cand.band);
        const double pe = pe_of(trial);
        TraceStep step{cand.band, cand.score, pe, Decision::kRejected, pe_star};
        if (pe < pe_star - cfg.threshold) {
            result.bands = std::move(trial);
            pe_star = pe;
            step.decision = Decision::kAccepted;
            step.pe_star = pe_star;
        }
        trace.steps.push_back(step);
    }
    if (result.bands.size() < cfg.target_count) {
        trace.warnings.push_back("candidates exhausted: selected " + std::to_string(result.bands.size()) + " of " +
                                 std::to_string(cfg.target_count) + " bands (" + describe(cfg.pe_mode) + ")");
    }
    return result;
}

SelectionResult wnmipe_select(const HyperCube& cube, const GroundTruth& gt, SelectionConfig cfg) {
    cfg.relevance = Relevance::kNmi;
    return wrapper_select(cube, gt, cfg);
}

SelectionResult wmif_select(const HyperCube& cube, const GroundTruth& gt, SelectionConfig cfg) {
    cfg.relevance = Relevance::kMi;
    return wrapper_select(cube, gt, cfg);
}

std::vector<std::size_t> mrmr_select(const HyperCube& cube, const GroundTruth& gt, const SelectionConfig& cfg) {
    cfg.validate(cube.bands());
    const RankedBands ranked = rank_impl(cube, gt, cfg, Relevance::kMi);

    std::vector<double> relevance(cube.bands(), 0.0);
    std::vector<bool> candidate(cube.bands(), false);
    for (const auto& s : ranked.order) {
        relevance[s.band] = s.score;
        candidate[s.band] = true;
    }
    std::vector<double> redundancy(cube.bands(), 0.0);

    std::vector<std::size_t> selected{ranked.order.front().band};
    candidate[selected.front()] = false;
    while (selected.size() < cfg.target_count) {
        const QuantizedBand& last = ranked.quantized[selected.back()];
        std::size_t best = cube.bands();
        double best_score = -std::numeric_limits<double>::infinity();
        for (std::size_t b = 0; b < cube.bands(); ++b) {
            if (!candidate[b]) {
                continue;
            }
            redundancy[b] += mutual_information(ranked.quantized[b], last);
            const double score = relevance[b] - redundancy[b] / static_cast<double>(selected.size());
            if (score > best_score) {
                best_score = score;
                best = b;
            }
        }
        selected.push_back(best);
        candidate[best] = false;
    }
    return selected;
}

bool trace_invariants_hold(const SelectionTrace& trace, double threshold, std::size_t target_count) {
    if (trace.steps.empty()) {
        return true;
    }
    if (trace.steps.front().decision != Decision::kAccepted) {
        return false;
    }
    std::set<std::size_t> seen;
    std::size_t accepted = 0;
    double pe_star = std::numeric_limits<double>::infinity();
    for (const auto& s : trace.steps) {
        if (!seen.insert(s.band).second) {
            return false;
        }
        if (s.decision == Decision::kAccepted) {
            if (accepted > 0 && !(s.pe < pe_star - threshold)) {
                return false;
            }
            pe_star = s.pe;
            ++accepted;
        }
        if (s.pe_star != pe_star) {
            return false;
        }
    }
    return accepted <= target_count;
}

}  // namespace hsband
