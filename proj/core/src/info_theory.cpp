#include "hsband/info_theory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>

#include "hsband/errors.hpp"

namespace hsband {

namespace {

template <typename T>
QuantizedBand quantize_impl(std::span<const T> values, std::uint32_t levels) {
    if (values.empty()) {
        throw ValidationError("quantize_band: empty band");
    }
    if (levels < 2 || levels > 65536) {
        throw ValidationError("quantize_band: levels must be in [2, 65536], got " + std::to_string(levels));
    }
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!std::isfinite(values[i])) {
            throw ValidationError("quantize_band: non-finite value at pixel " + std::to_string(i));
        }
    }
    const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
    const double lo = static_cast<double>(*lo_it);
    const double range = static_cast<double>(*hi_it) - lo;

    QuantizedBand out;
    out.levels = levels;
    out.values.assign(values.size(), 0);
    if (range <= 0.0) {
        return out;
    }
    const auto top = static_cast<double>(levels - 1);
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double bin = std::floor((static_cast<double>(values[i]) - lo) / range * levels);
        out.values[i] = static_cast<std::uint16_t>(std::clamp(bin, 0.0, top));
    }
    return out;
}

void check_view(DiscreteView v, const char* who) {
    for (auto s : v.symbols) {
        if (s >= v.alphabet) {
            throw ValidationError(std::string(who) + ": symbol " + std::to_string(s) + " outside alphabet of size " +
                                  std::to_string(v.alphabet));
        }
    }
}

void check_lengths(DiscreteView a, DiscreteView b, const char* who) {
    if (a.size() != b.size()) {
        throw ValidationError(std::string(who) + ": length mismatch (" + std::to_string(a.size()) + " vs " +
                              std::to_string(b.size()) + ")");
    }
    if (a.size() == 0) {
        throw ValidationError(std::string(who) + ": empty input");
    }
}

double clamp_noise(double v) { return (v < 0.0 && v > -kClampTolerance) ? 0.0 : v; }

struct Entropies {
    double g;
    double b;
    double joint;
};

Entropies entropies(DiscreteView g, DiscreteView b, const char* who) {
    check_lengths(g, b, who);
    const JointHistogram h(g, b);
    return {h.entropy_rows(), h.entropy_cols(), h.joint_entropy()};
}

}  // namespace

void validate(const LabelVector& g) {
    if (g.num_classes < 2) {
        throw ValidationError("label vector needs at least 2 classes, got " + std::to_string(g.num_classes));
    }
    for (std::size_t i = 0; i < g.labels.size(); ++i) {
        const auto l = g.labels[i];
        if (l == 0 || l > g.num_classes) {
            throw ValidationError("label " + std::to_string(l) + " at position " + std::to_string(i) +
                                  " outside 1.." + std::to_string(g.num_classes));
        }
    }
}

QuantizedBand quantize_band(std::span<const float> values, std::uint32_t levels) {
    return quantize_impl(values, levels);
}

QuantizedBand quantize_band(std::span<const double> values, std::uint32_t levels) {
    return quantize_impl(values, levels);
}

JointHistogram::JointHistogram(DiscreteView a, DiscreteView b) : rows_(a.alphabet), cols_(b.alphabet) {
    if (a.size() != b.size()) {
        throw ValidationError("JointHistogram: length mismatch");
    }
    check_view(a, "JointHistogram");
    check_view(b, "JointHistogram");
    counts_.assign(static_cast<std::size_t>(rows_) * cols_, 0);
    for (std::size_t i = 0; i < a.size(); ++i) {
        ++counts_[static_cast<std::size_t>(a.symbols[i]) * cols_ + b.symbols[i]];
    }
    total_ = a.size();
}

std::vector<std::uint64_t> JointHistogram::row_marginal() const {
    std::vector<std::uint64_t> m(rows_, 0);
    for (std::uint32_t r = 0; r < rows_; ++r) {
        for (std::uint32_t c = 0; c < cols_; ++c) {
            m[r] += count(r, c);
        }
    }
    return m;
}

std::vector<std::uint64_t> JointHistogram::col_marginal() const {
    std::vector<std::uint64_t> m(cols_, 0);
    for (std::uint32_t r = 0; r < rows_; ++r) {
        for (std::uint32_t c = 0; c < cols_; ++c) {
            m[c] += count(r, c);
        }
    }
    return m;
}

double JointHistogram::entropy_rows() const { return entropy_from_counts(row_marginal(), total_); }
double JointHistogram::entropy_cols() const { return entropy_from_counts(col_marginal(), total_); }
double JointHistogram::joint_entropy() const { return entropy_from_counts(counts_, total_); }

double JointHistogram::mutual_information() const {
    const auto rows = row_marginal();
    const auto cols = col_marginal();
    const double n = static_cast<double>(total_);
    double mi = 0.0;
    for (std::uint32_t r = 0; r < rows_; ++r) {
        for (std::uint32_t c = 0; c < cols_; ++c) {
            const auto k = count(r, c);
            if (k == 0) {
                continue;
            }
            const double kd = static_cast<double>(k);
            mi += kd / n * std::log2(kd * n / (static_cast<double>(rows[r]) * static_cast<double>(cols[c])));
        }
    }
    return mi;
}

double entropy_from_counts(std::span<const std::uint64_t> counts, std::uint64_t total) {
    if (total == 0) {
        throw ValidationError("entropy: empty histogram");
    }
    const double n = static_cast<double>(total);
    double h = 0.0;
    for (auto c : counts) {
        if (c == 0) {
            continue;
        }
        const double p = static_cast<double>(c) / n;
        h -= p * std::log2(p);
    }
    // A single occupied bin gives -1 * log2(1) = -0.0.
    return h + 0.0;
}

double entropy(DiscreteView x) {
    if (x.size() == 0) {
        throw ValidationError("entropy: empty input");
    }
    check_view(x, "entropy");
    std::vector<std::uint64_t> counts(x.alphabet, 0);
    for (auto s : x.symbols) {
        ++counts[s];
    }
    return entropy_from_counts(counts, x.size());
}

double mutual_information(DiscreteView g, DiscreteView b) {
    check_lengths(g, b, "mutual_information");
    return clamp_noise(JointHistogram(g, b).mutual_information());
}

double normalized_mi(DiscreteView g, DiscreteView b) {
    const auto e = entropies(g, b, "normalized_mi");
    if (e.joint == 0.0) {
        return 1.0;
    }
    return (e.g + e.b) / e.joint;
}

double conditional_entropy(DiscreteView g, DiscreteView b) {
    const auto e = entropies(g, b, "conditional_entropy");
    return std::max(0.0, clamp_noise(e.joint - e.b));
}

double fano_pe_lower(const LabelVector& g, DiscreteView estimate) {
    if (g.num_classes < 2) {
        throw ValidationError("fano_pe_lower: need at least 2 classes, got " + std::to_string(g.num_classes));
    }
    check_lengths(g, estimate, "fano_pe_lower");
    const JointHistogram h(g, estimate);
    const double mi = clamp_noise(h.mutual_information());
    return (h.entropy_rows() - mi - 1.0) / std::log2(static_cast<double>(g.num_classes));
}

double fano_pe_upper(const LabelVector& g, DiscreteView estimate) {
    if (g.num_classes < 2) {
        throw ValidationError("fano_pe_upper: need at least 2 classes, got " + std::to_string(g.num_classes));
    }
    return conditional_entropy(g, estimate) / 2.0;
}

QuantizedBand joint_symbols(std::span<const QuantizedBand* const> parts) {
    if (parts.empty()) {
        throw ValidationError("joint_symbols: no inputs");
    }
    const std::size_t n = parts.front()->values.size();
    for (const auto* p : parts) {
        if (p->values.size() != n) {
            throw ValidationError("joint_symbols: length mismatch");
        }
    }
    std::map<std::vector<std::uint16_t>, std::uint32_t> ids;
    QuantizedBand out;
    out.values.resize(n);
    std::vector<std::uint16_t> key(parts.size());
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < parts.size(); ++k) {
            key[k] = parts[k]->values[i];
        }
        const auto [it, inserted] = ids.try_emplace(key, static_cast<std::uint32_t>(ids.size()));
        if (it->second > std::numeric_limits<std::uint16_t>::max()) {
            throw ValidationError("joint_symbols: more than 65536 distinct tuples");
        }
        out.values[i] = static_cast<std::uint16_t>(it->second);
    }
    out.levels = std::max<std::uint32_t>(2, static_cast<std::uint32_t>(ids.size()));
    return out;
}

}  // namespace hsband
