#include "sarcd/metrics.hpp"

#include <cmath>
#include <sstream>

#include "sarcd/common.hpp"

namespace sarcd {

Confusion confusion(const ChangeMap& pred, const ChangeMap& truth) {
    if (pred.width != truth.width || pred.height != truth.height)
        throw ValidationError("confusion: dimension mismatch, " + std::to_string(pred.width) + "x" +
                              std::to_string(pred.height) + " vs " + std::to_string(truth.width) +
                              "x" + std::to_string(truth.height));
    Confusion c;
    for (std::size_t i = 0; i < pred.labels.size(); ++i) {
        const bool p = pred.labels[i] != 0;
        const bool t = truth.labels[i] != 0;
        if (p && t) ++c.tp;
        else if (!p && !t) ++c.tn;
        else if (p && !t) ++c.fp;
        else ++c.fn;
    }
    return c;
}

EvalReport report(std::uint64_t tp, std::uint64_t tn, std::uint64_t fp, std::uint64_t fn) {
    const std::uint64_t total = tp + tn + fp + fn;
    if (total == 0) throw ValidationError("report: zero total pixel count");

    EvalReport r;
    r.tp = tp;
    r.tn = tn;
    r.fp = fp;
    r.fn = fn;
    r.oe = fp + fn;

    const double n = static_cast<double>(total);
    const double po = static_cast<double>(tp + tn) / n;
    r.pcc = 100.0 * po;

    const double pe = (static_cast<double>(tp + fp) * static_cast<double>(tp + fn) +
                       static_cast<double>(tn + fn) * static_cast<double>(tn + fp)) /
                      (n * n);
    if (pe == 1.0) {
        r.kc = po == 1.0 ? 100.0 : 0.0;
    } else {
        r.kc = 100.0 * ((po - pe) / (1.0 - pe));
    }
    return r;
}

EvalReport evaluate(const ChangeMap& pred, const ChangeMap& truth) {
    const Confusion c = confusion(pred, truth);
    return report(c.tp, c.tn, c.fp, c.fn);
}

std::string format_fixed2(double v) {
    const long long scaled = std::llround(v * 100.0);
    const long long whole = scaled / 100;
    const long long frac = std::llabs(scaled % 100);
    std::ostringstream os;
    if (scaled < 0 && whole == 0) os << "-";
    os << whole << "." << (frac < 10 ? "0" : "") << frac;
    return os.str();
}

std::string format_report(const EvalReport& r) {
    std::ostringstream os;
    os << "tp: " << r.tp << "\n"
       << "tn: " << r.tn << "\n"
       << "fp: " << r.fp << "\n"
       << "fn: " << r.fn << "\n"
       << "oe: " << r.oe << "\n"
       << "pcc: " << format_fixed2(r.pcc) << "\n"
       << "kc: " << format_fixed2(r.kc) << "\n";
    return os.str();
}

std::string format_report_line(const EvalReport& r) {
    std::ostringstream os;
    os << r.tp << " " << r.tn << " " << r.fp << " " << r.fn << " " << r.oe << " "
       << format_fixed2(r.pcc) << " " << format_fixed2(r.kc);
    return os.str();
}

}  // namespace sarcd
