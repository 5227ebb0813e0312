#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "hsband/classifier.hpp"
#include "hsband/dataset.hpp"
#include "hsband/info_theory.hpp"

namespace hsband {

enum class Relevance { kNmi, kMi };

/// What the wrapper minimizes when deciding on a candidate band.
enum class PeMode {
    kFanoPrediction,  // fano_pe_lower(G, classifier output)
    kFanoBands,       // fano_pe_lower(G, joint quantized subset), no classifier
    kEmpiricalError,  // 1 - agreement(G, classifier output)
};

struct SelectionConfig {
    std::size_t target_count = 1;
    double threshold = 0.0;
    Relevance relevance = Relevance::kNmi;
    std::uint32_t levels = kDefaultLevels;
    InductionConfig induction;
    double train_fraction = 0.5;
    std::uint64_t split_seed = 1;
    PeMode pe_mode = PeMode::kFanoPrediction;
    std::vector<std::size_t> excluded_bands;

    void validate(std::size_t total_bands) const;
};

struct BandScore {
    std::size_t band = 0;
    double score = 0.0;
};

enum class Decision { kAccepted, kRejected };

struct TraceStep {
    std::size_t band = 0;
    double relevance = 0.0;
    double pe = 0.0;
    Decision decision = Decision::kRejected;
    double pe_star = 0.0;  // running best PE after this step
};

struct SelectionTrace {
    std::vector<TraceStep> steps;
    std::vector<std::string> warnings;

    std::vector<std::size_t> accepted() const;
};

struct SelectionResult {
    std::vector<std::size_t> bands;  // acceptance order
    SelectionTrace trace;
};

/// Thrown when the induction step fails mid-run; carries the steps taken so far.
class SelectionAborted : public std::runtime_error {
public:
    SelectionAborted(const std::string& what, SelectionTrace partial)
        : std::runtime_error(what), trace_(std::move(partial)) {}
    const SelectionTrace& trace() const { return trace_; }

private:
    SelectionTrace trace_;
};

/// Scores every non-excluded band against the labels over labeled pixels,
/// sorted by descending score; equal scores keep the smaller band first.
std::vector<BandScore> rank_bands_by_relevance(const HyperCube& cube, const GroundTruth& gt,
                                               const SelectionConfig& cfg);

/// Trains the configured classifier on the internal training split restricted
/// to `bands` and predicts every labeled pixel. A band whose raster is
/// identical to an earlier band in the list contributes no extra feature.
LabelVector estimate_ground_truth(const HyperCube& cube, const GroundTruth& gt, const std::vector<std::size_t>& bands,
                                  const SelectionConfig& cfg);

/// Incremental wrapper: seed with the top-ranked band, then walk the ranking
/// once, keeping a candidate only when PE < PE* - threshold. Rejected bands
/// are never revisited. Uses cfg.relevance for the ranking.
SelectionResult wrapper_select(const HyperCube& cube, const GroundTruth& gt, const SelectionConfig& cfg);

/// Wrapper ranked by normalized mutual information.
SelectionResult wnmipe_select(const HyperCube& cube, const GroundTruth& gt, SelectionConfig cfg);

/// Wrapper ranked by plain mutual information.
SelectionResult wmif_select(const HyperCube& cube, const GroundTruth& gt, SelectionConfig cfg);

/// Greedy max-relevance min-redundancy filter: maximizes
/// I(G;b) - mean_{s in S} I(b;s). Always returns exactly target_count bands.
std::vector<std::size_t> mrmr_select(const HyperCube& cube, const GroundTruth& gt, const SelectionConfig& cfg);

/// True when accepted steps strictly improve PE* by more than threshold,
/// accepted bands are unique, no band appears twice in the trace, and at most
/// target_count bands were accepted.
bool trace_invariants_hold(const SelectionTrace& trace, double threshold, std::size_t target_count);

}  // namespace hsband
