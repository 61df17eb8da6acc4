#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sarcd/metrics.hpp"
#include "sarcd/model.hpp"
#include "sarcd/preclassify.hpp"
#include "sarcd/raster.hpp"

namespace sarcd {

struct DetectOptions {
    int r = 7;
    int epochs = 30;
    int batch_size = 128;
    double lr = 1e-3;
    double alpha = 0.1;
    double beta = 0.9;
    std::uint64_t seed = 0;
    int max_per_class = 20000;
    double flip_rate = 0.0;
    bool use_attention = true;
    int threads = 0;
};

void validate(const DetectOptions& opt);

struct DetectResult {
    ChangeMap map;
    ModelParams params;
    TrainConfig train_config;
    std::vector<double> epoch_loss;
    PseudoLabelMap prelabels;
    std::optional<EvalReport> report;  // filled when truth is supplied
};

// Full flow: log-ratio, clustering, patch sampling, optional label noise,
// training, per-pixel classification, optional evaluation.
DetectResult detect(const RasterImage& i1, const RasterImage& i2, const DetectOptions& opt,
                    const ChangeMap* truth = nullptr,
                    std::ostream* progress = nullptr);

struct SweepRow {
    int r = 0;
    double pcc = 0.0;
};

// One detect run per patch size, shared seed; r values must be odd and in
// [5, 15].
std::vector<SweepRow> sweep(const RasterImage& i1, const RasterImage& i2, const ChangeMap& truth,
                            const std::vector<int>& r_values, DetectOptions base,
                            std::ostream* progress = nullptr);

}  // namespace sarcd
