#include "sarcd/pipeline.hpp"

#include <ostream>

#include "sarcd/common.hpp"
#include "sarcd/diff_image.hpp"
#include "sarcd/patches.hpp"

namespace sarcd {

void validate(const DetectOptions& opt) {
    PatchConfig pc{opt.r, opt.max_per_class, opt.seed};
    validate(pc);
    TrainConfig tc;
    tc.epochs = opt.epochs;
    tc.batch_size = opt.batch_size;
    tc.lr = opt.lr;
    tc.loss_weights = {opt.alpha, opt.beta};
    tc.flip_rate = opt.flip_rate;
    validate(tc);
    if (!(opt.lr > 0.0)) throw ValidationError("detect: learning rate must be positive");
}

DetectResult detect(const RasterImage& i1, const RasterImage& i2, const DetectOptions& opt,
                    const ChangeMap* truth, std::ostream* progress) {
    validate(opt);
    if (i1.width != i2.width || i1.height != i2.height)
        throw ValidationError("detect: image sizes differ, " + std::to_string(i1.width) + "x" +
                              std::to_string(i1.height) + " vs " + std::to_string(i2.width) + "x" +
                              std::to_string(i2.height));
    if (truth && (truth->width != i1.width || truth->height != i1.height))
        throw ValidationError("detect: ground truth dimensions do not match the images");

    const DifferenceImage di = log_ratio(i1, i2);
    if (progress) *progress << "difference image ready\n";

    DetectResult result;
    result.prelabels = hierarchical_fcm(di);
    if (progress)
        *progress << "preclassification: " << result.prelabels.count(PixelLabel::Changed)
                  << " changed, " << result.prelabels.count(PixelLabel::Unchanged)
                  << " unchanged, " << result.prelabels.count(PixelLabel::Intermediate)
                  << " intermediate\n";

    PatchConfig pc{opt.r, opt.max_per_class, opt.seed};
    std::vector<Sample> samples = build_training_set(i1, i2, di, result.prelabels, pc);
    if (opt.flip_rate > 0.0) inject_label_noise(samples, opt.flip_rate, opt.seed);
    if (progress) *progress << "training set: " << samples.size() << " samples\n";

    TrainConfig tc;
    tc.epochs = opt.epochs;
    tc.batch_size = opt.batch_size;
    tc.lr = opt.lr;
    tc.seed = opt.seed;
    tc.loss_weights = {opt.alpha, opt.beta};
    tc.flip_rate = opt.flip_rate;
    tc.use_attention = opt.use_attention;
    tc.threads = opt.threads;
    TrainResult trained = train(samples, tc);
    result.train_config = tc;
    result.epoch_loss = trained.epoch_loss;
    if (progress) {
        *progress << "trained " << tc.epochs << " epochs, final loss "
                  << (trained.epoch_loss.empty() ? 0.0 : trained.epoch_loss.back()) << "\n";
    }

    result.map = predict_map(trained.params, i1, i2, di, opt.r, opt.threads);
    result.params = std::move(trained.params);
    if (truth) result.report = evaluate(result.map, *truth);
    return result;
}

std::vector<SweepRow> sweep(const RasterImage& i1, const RasterImage& i2, const ChangeMap& truth,
                            const std::vector<int>& r_values, DetectOptions base,
                            std::ostream* progress) {
    if (r_values.empty()) throw ValidationError("sweep: empty patch-size list");
    for (int r : r_values)
        if (r < 5 || r > 15 || r % 2 == 0)
            throw ValidationError("sweep: r values must be odd and in [5, 15], got " +
                                  std::to_string(r));

    std::vector<SweepRow> rows;
    for (int r : r_values) {
        base.r = r;
        if (progress) *progress << "sweep: r=" << r << "\n";
        const DetectResult res = detect(i1, i2, base, &truth, progress);
        rows.push_back({r, res.report->pcc});
    }
    return rows;
}

}  // namespace sarcd
