#pragma once

#include "posewatch/metrics.hpp"
#include "posewatch/run_config.hpp"

namespace posewatch::cli {

// Subcommand bodies, file-level in and out, shared by the command-line tool
// and the test suites. All throw on failure; the CLI turns that into a
// nonzero exit.

// Writes train/test pose files and label files into out_dir.
void run_synth(const RunConfig& config);

// pose-io -> tokenizer -> reconstruction training; writes the stage
// checkpoint and a per-epoch loss log. Refuses to train when the supplied
// training labels contain anomalous frames.
void run_train_ctd(const RunConfig& config);

// Loads the reconstruction checkpoint, trains the future decoder only, and
// writes the combined checkpoint plus its loss log.
void run_train_ftd(const RunConfig& config);

// Scores the test poses with the combined checkpoint; emits raw CS and FS
// series, the fused per-person HS series, and the frame-level series.
void run_score(const RunConfig& config);

// Frame scores + labels -> report file and ROC table; returns the report.
EvalReport run_eval(const RunConfig& config);

// One ablation cell result.
struct AblateRow {
    Scheme scheme;
    bool use_relative = false;
    double auc_c = 0, auc_f = 0, auc_h = 0;
    double eer_c = 0, eer_f = 0, eer_h = 0;
};

// Full 4-scheme x {relative on/off} grid over the synthetic benchmark;
// writes per-cell artifacts under out_dir/ablate/<scheme>_<rel>/ and the
// summary table. Assumes synth files exist (runs pose generation when not).
std::vector<AblateRow> run_ablate(const RunConfig& config);

void run_dump_tokens(const RunConfig& config);

// Default file locations under out_dir for anything unset in [paths].
std::string poses_train_path(const RunConfig& c);
std::string poses_test_path(const RunConfig& c);
std::string labels_train_path(const RunConfig& c);
std::string labels_test_path(const RunConfig& c);
std::string checkpoint_ctd_path(const RunConfig& c);
std::string checkpoint_path(const RunConfig& c);
std::string frame_scores_path(const RunConfig& c);
std::string report_path(const RunConfig& c);

std::string format_ablate_table(const std::vector<AblateRow>& rows);

}  // namespace posewatch::cli
