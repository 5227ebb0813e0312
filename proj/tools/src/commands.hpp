#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "config.hpp"
#include "hsband/dataset.hpp"
#include "hsband/metrics.hpp"

namespace hsband::cli {

struct Console {
    std::ostream& out;
    std::ostream& err;
};

/// Exclusive marker file in an output directory, removed on destruction.
class OutputLock {
public:
    explicit OutputLock(const std::filesystem::path& dir);
    ~OutputLock();
    OutputLock(const OutputLock&) = delete;
    OutputLock& operator=(const OutputLock&) = delete;

private:
    std::filesystem::path path_;
};

inline constexpr const char* kLockName = ".hsband.lock";
inline constexpr const char* kRunLogName = "run.log";

/// Appends "file=<name> command=<cmd> config=<hash> seeds=<seeds>" to the
/// run log next to `file`.
void record_output(const std::filesystem::path& file, const std::string& command, const std::string& config_hash,
                   const std::string& seeds);

struct GenSyntheticArgs {
    SyntheticSpec spec;
    std::uint32_t duplicates = 0;  // copies of informative bands 0, 1, ... (cycling)
    std::filesystem::path out_dir = ".";
};

inline constexpr const char* kSyntheticCube = "cube.hsc";
inline constexpr const char* kSyntheticTruth = "ground_truth.hsg";

void cmd_gen_synthetic(const GenSyntheticArgs& args, const Console& io);
void cmd_select(const ExperimentConfig& cfg, const Console& io);
void cmd_classify(const ExperimentConfig& cfg, const Console& io);

using Rgb = std::array<std::uint8_t, 3>;

/// Class c sits at hue (c - 1) * golden angle on the full-saturation wheel.
Rgb default_color(std::uint16_t label);
std::map<std::uint16_t, Rgb> read_palette(const std::filesystem::path& path);
/// Binary P6 image; label 0 is black. Throws when `palette` lacks a present class.
std::string render_ppm(const GroundTruth& raster, const std::map<std::uint16_t, Rgb>* palette);

struct RenderArgs {
    std::filesystem::path predictions;
    std::filesystem::path palette;  // empty: default palette
    std::filesystem::path output;   // empty: predictions path with .ppm extension
};

void cmd_render_map(const RenderArgs& args, const Console& io);

/// Metrics CSV: header, one ICA row per class, then AA, OA and Kappa rows.
std::string format_metrics_csv(const ConfusionMatrix& cm, const MetricsReport& report,
                               const std::vector<std::size_t>& train_counts);

struct MetricsRow {
    std::string name;  // "Class <c>", "AA", "OA" or "Kappa"
    std::string value;
};

std::vector<MetricsRow> read_metrics_csv(const std::filesystem::path& path);

struct ReportArgs {
    std::vector<std::filesystem::path> metrics;
    std::vector<std::string> labels;  // default: parent directory names
    std::optional<double> target_oa;  // percent
    std::filesystem::path output;     // optional CSV copy of the table
};

void cmd_report(const ReportArgs& args, const Console& io);

struct SummaryArgs {
    std::filesystem::path cube;
    std::filesystem::path ground_truth;
};

void cmd_summary(const SummaryArgs& args, const Console& io);

}  // namespace hsband::cli
