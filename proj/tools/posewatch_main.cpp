// Command-line entry point: config + seed in, reproducible artifacts out.

#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "posewatch/commands.hpp"

namespace {

struct CliOverrides {
    std::string config_path;
    std::string scheme;
    std::string out_dir;
    std::string scores;
    std::string labels;
    std::uint64_t seed = 0;
    bool seed_set = false;
    bool no_relative = false;
    int stride = 0;
};

posewatch::RunConfig resolve_config(const CliOverrides& o) {
    posewatch::RunConfig config = o.config_path.empty()
                                      ? posewatch::default_synth_run()
                                      : posewatch::parse_run_config(o.config_path);
    if (o.seed_set) config.seed = o.seed;
    if (!o.scheme.empty()) config.scheme.scheme = posewatch::scheme_from_name(o.scheme);
    if (o.no_relative) config.scheme.use_relative = false;
    if (o.stride > 0) config.stride = o.stride;
    if (!o.out_dir.empty()) config.paths.out_dir = o.out_dir;
    if (!o.scores.empty()) config.paths.scores = o.scores;
    if (!o.labels.empty()) config.paths.labels_test = o.labels;
    config.validate();
    return config;
}

void add_common(CLI::App* cmd, CliOverrides& o) {
    cmd->add_option("--config", o.config_path, "Run configuration file (TOML-style key = value)")
        ->check(CLI::ExistingFile);
    cmd->add_option("--seed", o.seed, "Override the run seed")->each([&](const std::string&) {
        o.seed_set = true;
    });
    cmd->add_option("--scheme", o.scheme, "Tokenization scheme: st-prp, t-prp, ks-prp, fs-prp");
    cmd->add_flag("--no-relative", o.no_relative, "Drop the relative-pose channels");
    cmd->add_option("--stride", o.stride, "Window stride at scoring time");
    cmd->add_option("--out", o.out_dir, "Output directory");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"posewatch: pose-based video anomaly detection toolkit"};
    app.require_subcommand(1);
    CliOverrides o;

    auto* synth = app.add_subcommand("synth", "Generate the synthetic pose benchmark");
    auto* train_ctd = app.add_subcommand("train-ctd", "Train encoder + reconstruction decoder");
    auto* train_ftd =
        app.add_subcommand("train-ftd", "Train the future decoder against a frozen encoder");
    auto* score = app.add_subcommand("score", "Score pose tracks with a trained checkpoint");
    auto* eval = app.add_subcommand("eval", "Compute AUC-ROC and EER from scores and labels");
    auto* ablate = app.add_subcommand("ablate", "Run the tokenization x relative-pose grid");
    auto* dump = app.add_subcommand("dump-tokens", "Emit token matrices for fixture diffing");
    for (auto* cmd : {synth, train_ctd, train_ftd, score, eval, ablate, dump}) add_common(cmd, o);
    eval->add_option("--scores", o.scores, "Frame-level score file");
    eval->add_option("--labels", o.labels, "Label file");

    CLI11_PARSE(app, argc, argv);

    try {
        const posewatch::RunConfig config = resolve_config(o);
        if (synth->parsed()) {
            posewatch::cli::run_synth(config);
            std::printf("synthetic benchmark written to %s\n", config.paths.out_dir.c_str());
        } else if (train_ctd->parsed()) {
            posewatch::cli::run_train_ctd(config);
            std::printf("checkpoint: %s\n", posewatch::cli::checkpoint_ctd_path(config).c_str());
        } else if (train_ftd->parsed()) {
            posewatch::cli::run_train_ftd(config);
            std::printf("checkpoint: %s\n", posewatch::cli::checkpoint_path(config).c_str());
        } else if (score->parsed()) {
            posewatch::cli::run_score(config);
            std::printf("scores written to %s\n", config.paths.out_dir.c_str());
        } else if (eval->parsed()) {
            const posewatch::EvalReport report = posewatch::cli::run_eval(config);
            std::printf("AUC-ROC: %.6f\nEER: %.6f (threshold %.6g)\n", report.auc_roc, report.eer,
                        report.eer_threshold);
        } else if (ablate->parsed()) {
            const auto rows = posewatch::cli::run_ablate(config);
            std::printf("%s", posewatch::cli::format_ablate_table(rows).c_str());
        } else if (dump->parsed()) {
            posewatch::cli::run_dump_tokens(config);
            std::printf("tokens written to %s/tokens.txt\n", config.paths.out_dir.c_str());
        }
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
