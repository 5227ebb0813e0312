#include "config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <sstream>

#include "hsband/errors.hpp"

namespace hsband::cli {

namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) {
        return "";
    }
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const std::string& expected) {
    throw ValidationError("config key '" + key + "': '" + value + "' is not " + expected);
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
    std::uint64_t v = 0;
    const auto* end = value.data() + value.size();
    const auto [ptr, ec] = std::from_chars(value.data(), end, v);
    if (value.empty() || ec != std::errc() || ptr != end) {
        bad_value(key, value, "a non-negative integer");
    }
    return v;
}

double parse_double(const std::string& key, const std::string& value) {
    double v = 0.0;
    const auto* end = value.data() + value.size();
    const auto [ptr, ec] = std::from_chars(value.data(), end, v);
    if (value.empty() || ec != std::errc() || ptr != end || !std::isfinite(v)) {
        bad_value(key, value, "a finite number");
    }
    return v;
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1" || value == "yes" || value == "on") {
        return true;
    }
    if (value == "false" || value == "0" || value == "no" || value == "off") {
        return false;
    }
    bad_value(key, value, "a boolean");
}

// Shortest text that reads back to the same double.
std::string format_double(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

std::string join(const std::vector<std::size_t>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        out += (i ? "," : "") + std::to_string(v[i]);
    }
    return out;
}

const char* selector_name(Selector s) {
    switch (s) {
        case Selector::kWnmipe:
            return "wnmipe";
        case Selector::kWmif:
            return "wmif";
        case Selector::kMrmr:
            return "mrmr";
        case Selector::kNone:
            return "none";
    }
    return "none";
}

const char* pe_mode_name(PeMode m) {
    switch (m) {
        case PeMode::kFanoPrediction:
            return "fano-prediction";
        case PeMode::kFanoBands:
            return "fano-bands";
        case PeMode::kEmpiricalError:
            return "empirical-error";
    }
    return "fano-prediction";
}

std::string path_digest(const std::filesystem::path& p) {
    if (p.empty()) {
        return "";
    }
    if (!std::filesystem::is_regular_file(p)) {
        return "missing";
    }
    return file_digest(p);
}

struct Key {
    std::string name;
    std::function<void(ExperimentConfig&, const std::string&)> set;
    std::function<std::string(const ExperimentConfig&)> canonical;
};

const std::vector<Key>& key_table() {
    static const std::vector<Key> table = {
        {"cube", [](ExperimentConfig& c, const std::string& v) { c.cube = v; },
         [](const ExperimentConfig& c) { return path_digest(c.cube); }},
        {"ground_truth", [](ExperimentConfig& c, const std::string& v) { c.ground_truth = v; },
         [](const ExperimentConfig& c) { return path_digest(c.ground_truth); }},
        {"bands_file", [](ExperimentConfig& c, const std::string& v) { c.bands_file = v; },
         [](const ExperimentConfig& c) { return path_digest(c.bands_file); }},
        {"out_dir", [](ExperimentConfig& c, const std::string& v) { c.out_dir = v; }, nullptr},
        {"selector",
         [](ExperimentConfig& c, const std::string& v) {
             if (v == "wnmipe") {
                 c.selector = Selector::kWnmipe;
             } else if (v == "wmif") {
                 c.selector = Selector::kWmif;
             } else if (v == "mrmr") {
                 c.selector = Selector::kMrmr;
             } else if (v == "none") {
                 c.selector = Selector::kNone;
             } else {
                 bad_value("selector", v, "one of wnmipe, wmif, mrmr, none");
             }
         },
         [](const ExperimentConfig& c) { return std::string(selector_name(c.selector)); }},
        {"bands", [](ExperimentConfig& c, const std::string& v) { c.target_count = parse_u64("bands", v); },
         [](const ExperimentConfig& c) { return std::to_string(c.target_count); }},
        {"threshold", [](ExperimentConfig& c, const std::string& v) { c.threshold = parse_double("threshold", v); },
         [](const ExperimentConfig& c) { return format_double(c.threshold); }},
        {"levels",
         [](ExperimentConfig& c, const std::string& v) {
             const auto n = parse_u64("levels", v);
             if (n < 2 || n > 65536) {
                 bad_value("levels", v, "in [2, 65536]");
             }
             c.levels = static_cast<std::uint32_t>(n);
         },
         [](const ExperimentConfig& c) { return std::to_string(c.levels); }},
        {"train_fraction",
         [](ExperimentConfig& c, const std::string& v) {
             c.train_fraction = parse_double("train_fraction", v);
             if (!(c.train_fraction > 0.0 && c.train_fraction < 1.0)) {
                 bad_value("train_fraction", v, "in (0, 1)");
             }
         },
         [](const ExperimentConfig& c) { return format_double(c.train_fraction); }},
        {"split_seed", [](ExperimentConfig& c, const std::string& v) { c.split_seed = parse_u64("split_seed", v); },
         [](const ExperimentConfig& c) { return std::to_string(c.split_seed); }},
        {"selection_seed",
         [](ExperimentConfig& c, const std::string& v) { c.selection_seed = parse_u64("selection_seed", v); },
         [](const ExperimentConfig& c) { return std::to_string(c.resolved_selection_seed()); }},
        {"classifier_seed",
         [](ExperimentConfig& c, const std::string& v) { c.classifier_seed = parse_u64("classifier_seed", v); },
         [](const ExperimentConfig& c) { return std::to_string(c.classifier_seed); }},
        {"classifier",
         [](ExperimentConfig& c, const std::string& v) {
             if (v == "svm") {
                 c.classifier = InductionKind::kSvm;
             } else if (v == "knn") {
                 c.classifier = InductionKind::kKnn;
             } else {
                 bad_value("classifier", v, "one of svm, knn");
             }
         },
         [](const ExperimentConfig& c) { return std::string(c.classifier == InductionKind::kSvm ? "svm" : "knn"); }},
        {"c",
         [](ExperimentConfig& c, const std::string& v) {
             c.c = parse_double("c", v);
             if (!(c.c > 0.0)) {
                 bad_value("c", v, "positive");
             }
         },
         [](const ExperimentConfig& c) { return format_double(c.c); }},
        {"gamma",
         [](ExperimentConfig& c, const std::string& v) {
             if (v == "auto") {
                 c.gamma.reset();
                 return;
             }
             c.gamma = parse_double("gamma", v);
             if (!(*c.gamma > 0.0)) {
                 bad_value("gamma", v, "positive or 'auto'");
             }
         },
         [](const ExperimentConfig& c) { return c.gamma ? format_double(*c.gamma) : std::string("auto"); }},
        {"knn_k",
         [](ExperimentConfig& c, const std::string& v) {
             c.knn_k = parse_u64("knn_k", v);
             if (c.knn_k == 0) {
                 bad_value("knn_k", v, "at least 1");
             }
         },
         [](const ExperimentConfig& c) { return std::to_string(c.knn_k); }},
        {"grid_search", [](ExperimentConfig& c, const std::string& v) { c.grid_search = parse_bool("grid_search", v); },
         [](const ExperimentConfig& c) { return std::string(c.grid_search ? "true" : "false"); }},
        {"pe_mode",
         [](ExperimentConfig& c, const std::string& v) {
             if (v == "fano-prediction") {
                 c.pe_mode = PeMode::kFanoPrediction;
             } else if (v == "fano-bands") {
                 c.pe_mode = PeMode::kFanoBands;
             } else if (v == "empirical-error") {
                 c.pe_mode = PeMode::kEmpiricalError;
             } else {
                 bad_value("pe_mode", v, "one of fano-prediction, fano-bands, empirical-error");
             }
         },
         [](const ExperimentConfig& c) { return std::string(pe_mode_name(c.pe_mode)); }},
        {"exclude_bands", [](ExperimentConfig& c, const std::string& v) { c.exclude_bands = parse_index_list(v); },
         [](const ExperimentConfig& c) { return join(c.exclude_bands); }},
    };
    return table;
}

}  // namespace

std::filesystem::path ExperimentConfig::resolved_bands_file() const {
    return bands_file.empty() ? out_dir / "bands.txt" : bands_file;
}

InductionConfig ExperimentConfig::induction_config() const {
    InductionConfig ic;
    ic.kind = classifier;
    ic.svm.c = c;
    ic.svm.gamma = gamma;
    ic.svm.seed = classifier_seed;
    ic.knn_k = knn_k;
    return ic;
}

SelectionConfig ExperimentConfig::selection_config() const {
    SelectionConfig sc;
    sc.target_count = target_count;
    sc.threshold = threshold;
    sc.relevance = selector == Selector::kWmif ? Relevance::kMi : Relevance::kNmi;
    sc.levels = levels;
    sc.induction = induction_config();
    sc.train_fraction = train_fraction;
    sc.split_seed = resolved_selection_seed();
    sc.pe_mode = pe_mode;
    sc.excluded_bands = exclude_bands;
    return sc;
}

const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> keys = [] {
        std::vector<std::string> k;
        for (const auto& key : key_table()) {
            k.push_back(key.name);
        }
        return k;
    }();
    return keys;
}

void set_config_value(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
    const auto& table = key_table();
    const auto it = std::find_if(table.begin(), table.end(), [&](const Key& k) { return k.name == key; });
    if (it == table.end()) {
        throw ValidationError("unknown config key '" + key + "'");
    }
    it->set(cfg, value);
}

std::map<std::string, std::string> parse_config_text(const std::string& text) {
    std::map<std::string, std::string> out;
    std::istringstream in(text);
    std::string line;
    for (std::size_t number = 1; std::getline(in, line); ++number) {
        line = trim(line.substr(0, line.find('#')));
        if (line.empty()) {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ValidationError("config line " + std::to_string(number) + ": expected key = value");
        }
        const std::string key = trim(line.substr(0, eq));
        const auto& keys = config_keys();
        if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
            throw ValidationError("config line " + std::to_string(number) + ": unknown key '" + key + "'");
        }
        if (!out.emplace(key, trim(line.substr(eq + 1))).second) {
            throw ValidationError("config line " + std::to_string(number) + ": key '" + key + "' set twice");
        }
    }
    return out;
}

std::map<std::string, std::string> read_config_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ValidationError("cannot read config file " + path.string());
    }
    std::ostringstream text;
    text << in.rdbuf();
    return parse_config_text(text.str());
}

std::string canonical_form(const ExperimentConfig& cfg) {
    std::string out;
    for (const auto& key : key_table()) {
        if (key.canonical) {
            out += key.name + "=" + key.canonical(cfg) + "\n";
        }
    }
    return out;
}

std::uint64_t fnv1a(const std::string& bytes, std::uint64_t seed) {
    std::uint64_t h = seed;
    for (unsigned char ch : bytes) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    std::ostringstream s;
    s << std::hex << std::setw(16) << std::setfill('0') << v;
    return s.str();
}

std::string file_digest(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw FormatError(FormatErrorKind::kIo, "cannot read " + path.string());
    }
    std::ostringstream bytes;
    bytes << in.rdbuf();
    return hex64(fnv1a(bytes.str()));
}

std::vector<std::size_t> parse_index_list(const std::string& text) {
    std::vector<std::size_t> out;
    std::istringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        item = trim(item);
        if (item.empty()) {
            continue;
        }
        const auto dash = item.find('-');
        if (dash == std::string::npos) {
            out.push_back(parse_u64("band list", item));
            continue;
        }
        const auto lo = parse_u64("band list", trim(item.substr(0, dash)));
        const auto hi = parse_u64("band list", trim(item.substr(dash + 1)));
        if (hi < lo) {
            bad_value("band list", item, "an ascending range");
        }
        for (auto b = lo; b <= hi; ++b) {
            out.push_back(b);
        }
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

}  // namespace hsband::cli
