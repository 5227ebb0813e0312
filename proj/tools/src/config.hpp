#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hsband/selection.hpp"

namespace hsband::cli {

enum class Selector { kWnmipe, kWmif, kMrmr, kNone };

struct ExperimentConfig {
    std::filesystem::path cube;
    std::filesystem::path ground_truth;
    std::filesystem::path bands_file;  // empty: <out_dir>/bands.txt
    std::filesystem::path out_dir = ".";
    Selector selector = Selector::kWnmipe;
    std::size_t target_count = 1;
    double threshold = 0.0;
    std::uint32_t levels = kDefaultLevels;
    double train_fraction = 0.5;
    std::uint64_t split_seed = 1;
    // Unset: reuse split_seed, so the wrapper trains on the same pixels as classify.
    std::optional<std::uint64_t> selection_seed;
    std::uint64_t classifier_seed = 1;
    InductionKind classifier = InductionKind::kSvm;
    double c = 100.0;
    std::optional<double> gamma;
    std::size_t knn_k = 5;
    bool grid_search = false;
    PeMode pe_mode = PeMode::kFanoPrediction;
    std::vector<std::size_t> exclude_bands;

    std::uint64_t resolved_selection_seed() const { return selection_seed.value_or(split_seed); }
    std::filesystem::path resolved_bands_file() const;
    SelectionConfig selection_config() const;
    InductionConfig induction_config() const;
};

/// Every key accepted in a config file, in canonical order.
const std::vector<std::string>& config_keys();

/// Applies one key=value assignment; unknown keys and malformed values throw
/// ValidationError.
void set_config_value(ExperimentConfig& cfg, const std::string& key, const std::string& value);

/// Flat "key = value" lines; '#' starts a comment.
std::map<std::string, std::string> parse_config_text(const std::string& text);
std::map<std::string, std::string> read_config_file(const std::filesystem::path& path);

/// "key=value" lines in canonical key order with path values replaced by a
/// digest of the file they name; out_dir is omitted. Equal experiments on
/// equal inputs serialize identically wherever their files live.
std::string canonical_form(const ExperimentConfig& cfg);

std::uint64_t fnv1a(const std::string& bytes, std::uint64_t seed = 14695981039346656037ULL);
std::string hex64(std::uint64_t v);
std::string file_digest(const std::filesystem::path& path);

std::vector<std::size_t> parse_index_list(const std::string& text);

}  // namespace hsband::cli
