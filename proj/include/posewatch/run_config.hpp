#pragma once

#include <cstdint>
#include <string>

#include "posewatch/scoring.hpp"
#include "posewatch/tokenizer.hpp"
#include "posewatch/uetd/config.hpp"

namespace posewatch {

struct RunPaths {
    std::string poses_train;
    std::string poses_test;
    std::string labels_train;
    std::string labels_test;
    std::string checkpoint_ctd;  // reconstruction-stage checkpoint
    std::string checkpoint;      // combined checkpoint after the future stage
    std::string scores;          // frame-level score file consumed by eval
    std::string report;
    std::string out_dir = "out";
};

struct SynthSection {
    int train_videos = 20;
    int test_videos = 10;
    int persons_per_video = 2;
    int n_frames = 600;
};

// Everything a run needs; serializable so any run is reproducible from its
// config file and inputs alone.
struct RunConfig {
    std::uint64_t seed = 7;
    TokenizationScheme scheme;  // st-prp with relative channels by default
    int beta = 24;
    int k = 17;
    int stride = 1;        // window stride at scoring time
    int train_stride = 24; // window stride for reconstruction training
    int pair_stride = 24;  // start stride for future-prediction pairs
    int dump_limit = 4;    // windows emitted by dump-tokens
    FillPolicy fill = FillPolicy::MinObserved;

    // Architecture overrides; 0 = derive from the scheme defaults
    // (st-prp 12/4/64, t-prp 8/8/128, ks-prp 8/4/128, fs-prp 12/6/64; the
    // embedding width is the smallest multiple of n_heads covering the
    // token dimension).
    int n_heads = 0;
    int n_layers = 0;
    int ff_dim = 0;
    int model_dim = 0;
    double dropout = 0.1;

    uetd::TrainConfig train_ctd;  // reconstruction branch: batch 512, lr 1e-5
    uetd::TrainConfig train_ftd{.learning_rate = 2e-3, .batch_size = 256};

    RunPaths paths;
    SynthSection synth;

    // Fills scheme-derived fields and branch seeds; throws on cross-field
    // inconsistencies (odd beta, model_dim vs heads, bad scheme dims).
    void validate() const;

    uetd::UetdConfig resolved_uetd() const;
    uetd::TrainConfig resolved_train(uetd::Branch branch) const;

    std::string serialize() const;
    std::string fingerprint() const;
};

// Architecture defaults per tokenization scheme.
void scheme_architecture(Scheme s, int& n_heads, int& n_layers, int& ff_dim);

RunConfig parse_run_config(const std::string& path);
RunConfig parse_run_config_text(const std::string& text, const std::string& origin = "<config>");
void write_run_config(const std::string& path, const RunConfig& config);

RunConfig default_synth_run();   // the shipped synthetic-benchmark defaults
RunConfig default_ablate_run();  // lighter per-cell training for the full grid

}  // namespace posewatch
