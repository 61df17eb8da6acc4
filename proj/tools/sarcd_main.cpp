#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "sarcd/common.hpp"
#include "sarcd/diff_image.hpp"
#include "sarcd/metrics.hpp"
#include "sarcd/model.hpp"
#include "sarcd/pipeline.hpp"
#include "sarcd/preclassify.hpp"
#include "sarcd/raster.hpp"
#include "sarcd/synth.hpp"

namespace {

struct DetectCli {
    std::string i1_path, i2_path, out_path, truth_path;
    std::string checkpoint_path, prelabels_path;
    sarcd::DetectOptions opt;
    bool ce_only = false;
    bool no_attention = false;
    bool oneline = false;
};

void add_training_flags(CLI::App* cmd, DetectCli& cli) {
    cmd->add_option("--r", cli.opt.r, "Patch side length (odd)")->default_val(7);
    cmd->add_option("--epochs", cli.opt.epochs, "Training epochs")->default_val(30);
    cmd->add_option("--batch", cli.opt.batch_size, "Mini-batch size")->default_val(128);
    cmd->add_option("--lr", cli.opt.lr, "Adam learning rate")->default_val(1e-3);
    cmd->add_option("--alpha", cli.opt.alpha, "Cross-entropy weight")->default_val(0.1);
    cmd->add_option("--beta", cli.opt.beta, "Absolute-error weight")->default_val(0.9);
    cmd->add_option("--seed", cli.opt.seed, "Run seed (explicit flag beats SARCD_SEED)")
        ->envname("SARCD_SEED")
        ->default_val(0);
    cmd->add_option("--max-per-class", cli.opt.max_per_class, "Training sample cap per class")
        ->default_val(20000);
    cmd->add_option("--flip-rate", cli.opt.flip_rate, "Synthetic label noise rate")
        ->default_val(0.0);
    cmd->add_option("--threads", cli.opt.threads, "Worker threads (0 = all cores)")
        ->default_val(0);
    cmd->add_flag("--no-attention", cli.no_attention, "Bypass the layer-attention block (Y = X)");
    cmd->add_flag("--ce-only", cli.ce_only, "Plain cross-entropy loss (alpha=1, beta=0)");
}

void finalize(DetectCli& cli) {
    if (cli.ce_only) {
        cli.opt.alpha = 1.0;
        cli.opt.beta = 0.0;
    }
    cli.opt.use_attention = !cli.no_attention;
}

void print_report(const sarcd::EvalReport& report, bool oneline) {
    if (oneline)
        std::cout << sarcd::format_report_line(report) << "\n";
    else
        std::cout << sarcd::format_report(report);
}

int run_detect(DetectCli& cli) {
    finalize(cli);
    const sarcd::RasterImage i1 = sarcd::read_pgm(cli.i1_path);
    const sarcd::RasterImage i2 = sarcd::read_pgm(cli.i2_path);

    sarcd::ChangeMap truth;
    const bool have_truth = !cli.truth_path.empty();
    if (have_truth) truth = sarcd::binarize(sarcd::read_pgm(cli.truth_path));

    const sarcd::DetectResult result =
        sarcd::detect(i1, i2, cli.opt, have_truth ? &truth : nullptr, &std::cerr);

    sarcd::write_change_map(result.map, cli.out_path);
    std::cerr << "change map written to " << cli.out_path << "\n";
    if (!cli.prelabels_path.empty()) sarcd::write_label_map(result.prelabels, cli.prelabels_path);
    if (!cli.checkpoint_path.empty())
        sarcd::save_checkpoint(result.params, result.train_config, cli.checkpoint_path);
    if (result.report) print_report(*result.report, cli.oneline);
    return 0;
}

int run_sweep(DetectCli& cli, const std::vector<int>& r_list) {
    finalize(cli);
    const sarcd::RasterImage i1 = sarcd::read_pgm(cli.i1_path);
    const sarcd::RasterImage i2 = sarcd::read_pgm(cli.i2_path);
    const sarcd::ChangeMap truth = sarcd::binarize(sarcd::read_pgm(cli.truth_path));

    const auto rows = sarcd::sweep(i1, i2, truth, r_list, cli.opt, &std::cerr);
    for (const auto& row : rows)
        std::cout << row.r << " " << sarcd::format_fixed2(row.pcc) << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Unsupervised SAR change detection: log-ratio difference image, fuzzy "
                 "clustering pseudo-labels, and a small layer-attention CNN"};
    app.require_subcommand(1);

    DetectCli detect_cli;
    auto* detect = app.add_subcommand("detect", "Produce a change map from a coregistered pair");
    detect->add_option("--i1", detect_cli.i1_path, "First image (PGM)")->required();
    detect->add_option("--i2", detect_cli.i2_path, "Second image (PGM)")->required();
    detect->add_option("--out", detect_cli.out_path, "Output change map (PGM)")->required();
    detect->add_option("--truth", detect_cli.truth_path, "Ground truth map for evaluation");
    detect->add_option("--save-checkpoint", detect_cli.checkpoint_path, "Write trained model here");
    detect->add_option("--dump-prelabels", detect_cli.prelabels_path,
                       "Write the clustering labels as a PGM (0/128/255)");
    detect->add_flag("--oneline", detect_cli.oneline, "Single-line report: tp tn fp fn oe pcc kc");
    add_training_flags(detect, detect_cli);

    DetectCli sweep_cli;
    std::vector<int> r_list{5, 7, 9, 11, 13, 15};
    auto* sweep = app.add_subcommand("sweep", "Patch-size sweep, one detect run per R");
    sweep->add_option("--i1", sweep_cli.i1_path, "First image (PGM)")->required();
    sweep->add_option("--i2", sweep_cli.i2_path, "Second image (PGM)")->required();
    sweep->add_option("--truth", sweep_cli.truth_path, "Ground truth map")->required();
    sweep->add_option("--r-list", r_list, "Patch sizes to try")->delimiter(',');
    add_training_flags(sweep, sweep_cli);

    sarcd::SceneSpec scene;
    std::string synth_i1, synth_i2, synth_truth;
    auto* synth = app.add_subcommand("synth", "Generate a synthetic speckled scene pair");
    synth->add_option("--i1", synth_i1, "Output path, first image")->required();
    synth->add_option("--i2", synth_i2, "Output path, second image")->required();
    synth->add_option("--truth", synth_truth, "Output path, ground truth")->required();
    synth->add_option("--width", scene.width)->default_val(128);
    synth->add_option("--height", scene.height)->default_val(128);
    synth->add_option("--shapes", scene.n_shapes, "Number of changed regions")->default_val(4);
    synth->add_option("--background", scene.background_level)->default_val(60.0);
    synth->add_option("--change", scene.change_level)->default_val(180.0);
    synth->add_option("--looks", scene.speckle_looks, "Speckle looks L")->default_val(4);
    synth->add_option("--seed", scene.seed)->envname("SARCD_SEED")->default_val(0);

    std::string pre_i1, pre_i2, pre_out;
    auto* preclassify = app.add_subcommand("preclassify", "Dump clustering labels for a pair");
    preclassify->add_option("--i1", pre_i1, "First image (PGM)")->required();
    preclassify->add_option("--i2", pre_i2, "Second image (PGM)")->required();
    preclassify->add_option("--out", pre_out, "Label map output (PGM, 0/128/255)")->required();

    std::string eval_pred, eval_truth;
    bool eval_oneline = false;
    auto* eval = app.add_subcommand("eval", "Score a change map against ground truth");
    eval->add_option("--pred", eval_pred, "Predicted change map (PGM)")->required();
    eval->add_option("--truth", eval_truth, "Ground truth map (PGM)")->required();
    eval->add_flag("--oneline", eval_oneline, "Single-line report: tp tn fp fn oe pcc kc");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (detect->parsed()) return run_detect(detect_cli);
        if (sweep->parsed()) return run_sweep(sweep_cli, r_list);
        if (synth->parsed()) {
            const sarcd::Scene s = sarcd::generate(scene);
            sarcd::write_pgm(s.i1, synth_i1);
            sarcd::write_pgm(s.i2, synth_i2);
            sarcd::write_change_map(s.truth, synth_truth);
            std::cerr << "scene written: " << synth_i1 << ", " << synth_i2 << ", " << synth_truth
                      << "\n";
            return 0;
        }
        if (preclassify->parsed()) {
            const sarcd::RasterImage i1 = sarcd::read_pgm(pre_i1);
            const sarcd::RasterImage i2 = sarcd::read_pgm(pre_i2);
            const sarcd::DifferenceImage di = sarcd::log_ratio(i1, i2);
            sarcd::write_label_map(sarcd::hierarchical_fcm(di), pre_out);
            std::cerr << "label map written to " << pre_out << "\n";
            return 0;
        }
        if (eval->parsed()) {
            const sarcd::ChangeMap pred = sarcd::binarize(sarcd::read_pgm(eval_pred));
            const sarcd::ChangeMap truth = sarcd::binarize(sarcd::read_pgm(eval_truth));
            print_report(sarcd::evaluate(pred, truth), eval_oneline);
            return 0;
        }
    } catch (const sarcd::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
