#pragma once

#include <cstdint>
#include <string>

#include "sarcd/raster.hpp"

namespace sarcd {

struct Confusion {
    std::uint64_t tp = 0;
    std::uint64_t tn = 0;
    std::uint64_t fp = 0;
    std::uint64_t fn = 0;

    std::uint64_t total() const { return tp + tn + fp + fn; }
};

/// Confusion counts plus the derived percentages. `pcc` and `kc` are on a
/// 0-100 scale; `oe` is fp + fn.
struct EvalReport {
    std::uint64_t tp = 0;
    std::uint64_t tn = 0;
    std::uint64_t fp = 0;
    std::uint64_t fn = 0;
    std::uint64_t oe = 0;
    double pcc = 0.0;
    double kc = 0.0;
};

// "Positive" means changed: fp counts predicted-changed over true-unchanged.
Confusion confusion(const ChangeMap& pred, const ChangeMap& truth);

// Cohen's kappa on the 2x2 confusion matrix, reported x100. The degenerate
// chance-agreement pe = 1 maps to kc = 100 when everything matches, else 0.
EvalReport report(std::uint64_t tp, std::uint64_t tn, std::uint64_t fp, std::uint64_t fn);

EvalReport evaluate(const ChangeMap& pred, const ChangeMap& truth);

// Percentages rendered to 2 decimals, round half away from zero.
std::string format_fixed2(double v);

// Flat key-value block: one "name: value" line per field.
std::string format_report(const EvalReport& r);

// Single-line record, field order: tp tn fp fn oe pcc kc.
std::string format_report_line(const EvalReport& r);

}  // namespace sarcd
