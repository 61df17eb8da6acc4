#include "sarcd/preclassify.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sarcd/common.hpp"
#include "sarcd/raster.hpp"

namespace sarcd {

std::size_t PseudoLabelMap::count(PixelLabel l) const {
    return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), l));
}

namespace {

constexpr double kFuzzifier = 2.0;
constexpr double kTol = 1e-5;
constexpr std::size_t kMaxIter = 100;
constexpr double kConfidence = 0.90;

// Linear-interpolation quantile of pre-sorted values.
double quantile_sorted(const std::vector<double>& sorted, double level) {
    const double pos = level * static_cast<double>(sorted.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

}  // namespace

FcmResult fcm(const std::vector<double>& samples, std::size_t c, double fuzzifier,
              std::size_t max_iter, double tol, std::uint64_t /*seed*/) {
    if (c < 2) throw ValidationError("fcm: cluster count must be at least 2");
    if (!(fuzzifier > 1.0)) throw ValidationError("fcm: fuzzifier must exceed 1");
    if (samples.empty()) throw ValidationError("fcm: empty sample set");

    const std::size_t n = samples.size();
    const auto [lo_it, hi_it] = std::minmax_element(samples.begin(), samples.end());
    if (*lo_it == *hi_it) throw NumericError("degenerate clustering input");

    // Quantile initialization; duplicates (quantized data) are spread by a
    // tiny offset so centers start distinct.
    std::vector<double> sorted(samples);
    std::sort(sorted.begin(), sorted.end());
    std::vector<double> centers(c);
    for (std::size_t k = 0; k < c; ++k)
        centers[k] = quantile_sorted(sorted, (static_cast<double>(k) + 0.5) / static_cast<double>(c));
    const double eps = (*hi_it - *lo_it) * 1e-6;
    for (std::size_t k = 1; k < c; ++k)
        if (centers[k] <= centers[k - 1]) centers[k] = centers[k - 1] + eps;

    const double mexp = fuzzifier;
    const double uexp = 2.0 / (fuzzifier - 1.0);

    FcmResult res;
    res.memberships.assign(n * c, 0.0);
    std::vector<double> dist(c), weight(c), num(c), den(c);

    for (std::size_t iter = 0; iter < max_iter; ++iter) {
        // Membership update for fixed centers. A sample coinciding exactly
        // with a center gets membership 1 on the first such center.
        for (std::size_t i = 0; i < n; ++i) {
            double dmin = std::abs(samples[i] - centers[0]);
            dist[0] = dmin;
            std::size_t zero_at = dist[0] == 0.0 ? 0 : c;
            for (std::size_t k = 1; k < c; ++k) {
                dist[k] = std::abs(samples[i] - centers[k]);
                dmin = std::min(dmin, dist[k]);
                if (dist[k] == 0.0 && zero_at == c) zero_at = k;
            }
            double* row = res.memberships.data() + i * c;
            if (zero_at < c) {
                std::fill(row, row + c, 0.0);
                row[zero_at] = 1.0;
                continue;
            }
            double sum = 0.0;
            for (std::size_t k = 0; k < c; ++k) {
                weight[k] = std::pow(dist[k] / dmin, -uexp);
                sum += weight[k];
            }
            for (std::size_t k = 0; k < c; ++k) row[k] = weight[k] / sum;
        }

        // Center update; clusters with no mass keep their previous value.
        std::fill(num.begin(), num.end(), 0.0);
        std::fill(den.begin(), den.end(), 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            const double* row = res.memberships.data() + i * c;
            for (std::size_t k = 0; k < c; ++k) {
                const double um = std::pow(row[k], mexp);
                num[k] += um * samples[i];
                den[k] += um;
            }
        }
        double max_delta = 0.0;
        for (std::size_t k = 0; k < c; ++k) {
            const double updated = den[k] > 0.0 ? num[k] / den[k] : centers[k];
            max_delta = std::max(max_delta, std::abs(updated - centers[k]));
            centers[k] = updated;
        }

        double objective = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double* row = res.memberships.data() + i * c;
            for (std::size_t k = 0; k < c; ++k) {
                const double d = samples[i] - centers[k];
                objective += std::pow(row[k], mexp) * d * d;
            }
        }
        res.objective_trace.push_back(objective);

        if (max_delta < tol) break;
    }

    // Ascending centers with membership columns permuted to match.
    std::vector<std::size_t> order(c);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return centers[a] < centers[b]; });
    res.centers.resize(c);
    for (std::size_t k = 0; k < c; ++k) res.centers[k] = centers[order[k]];
    for (std::size_t k = 1; k < c; ++k)
        if (!(res.centers[k] > res.centers[k - 1])) throw NumericError("fcm: clusters collapsed");
    std::vector<double> permuted(n * c);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < c; ++k)
            permuted[i * c + k] = res.memberships[i * c + order[k]];
    res.memberships = std::move(permuted);
    return res;
}

PseudoLabelMap hierarchical_fcm(const DifferenceImage& di) {
    if (di.width <= 0 || di.height <= 0 || di.data.size() != static_cast<std::size_t>(di.width) * di.height)
        throw ValidationError("hierarchical_fcm: malformed difference image");

    const std::vector<double>& samples = di.data;

    const FcmResult coarse = fcm(samples, 2, kFuzzifier, kMaxIter, kTol, 0);
    const double midpoint = (coarse.centers[0] + coarse.centers[1]) / 2.0;

    const FcmResult fine = fcm(samples, 5, kFuzzifier, kMaxIter, kTol, 0);
    const std::size_t c = fine.centers.size();

    PseudoLabelMap map;
    map.width = di.width;
    map.height = di.height;
    map.labels.resize(samples.size());

    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double* row = fine.memberships.data() + i * c;
        std::size_t best = 0;
        for (std::size_t k = 1; k < c; ++k)
            if (row[k] > row[best]) best = k;
        const double winning = row[best];

        PixelLabel label;
        if (best == 0) {
            label = PixelLabel::Unchanged;
        } else if (best == c - 1) {
            label = PixelLabel::Changed;
        } else if (fine.centers[best] > midpoint && winning >= kConfidence) {
            label = PixelLabel::Changed;
        } else if (fine.centers[best] < midpoint && winning >= kConfidence) {
            label = PixelLabel::Unchanged;
        } else {
            label = PixelLabel::Intermediate;
        }
        map.labels[i] = label;
    }

    if (map.count(PixelLabel::Changed) == 0 || map.count(PixelLabel::Unchanged) == 0)
        throw NumericError("preclassification collapsed");
    return map;
}

void write_label_map(const PseudoLabelMap& map, const std::string& path) {
    RasterImage img;
    img.width = map.width;
    img.height = map.height;
    img.data.resize(map.labels.size());
    for (std::size_t i = 0; i < map.labels.size(); ++i) {
        switch (map.labels[i]) {
            case PixelLabel::Unchanged: img.data[i] = 0.0; break;
            case PixelLabel::Intermediate: img.data[i] = 128.0; break;
            case PixelLabel::Changed: img.data[i] = 255.0; break;
        }
    }
    write_pgm(img, path);
}

}  // namespace sarcd
