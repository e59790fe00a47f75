#include "posewatch/commands.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "posewatch/io_util.hpp"
#include "posewatch/pose_io.hpp"
#include "posewatch/synth.hpp"
#include "posewatch/uetd/checkpoint.hpp"
#include "posewatch/uetd/train.hpp"

namespace posewatch::cli {

namespace {

namespace fs = std::filesystem;

std::string path_or(const std::string& explicit_path, const std::string& fallback) {
    return explicit_path.empty() ? fallback : explicit_path;
}

std::vector<PoseTrack> load_tracks(const std::string& path, int expected_k) {
    LoadResult res = load_pose_tracks(path, expected_k);
    if (res.report.records_rejected > 0) {
        std::fprintf(stderr, "%s: rejected %zu of %zu records\n", path.c_str(),
                     res.report.records_rejected, res.report.records_total);
        for (const auto& d : res.report.diagnostics) std::fprintf(stderr, "  %s\n", d.c_str());
    }
    if (!res.schema.normalized) {
        std::size_t clamped = 0;
        for (auto& t : res.tracks) {
            std::size_t c = 0;
            t = normalize_coordinates(t, res.schema.frame_width, res.schema.frame_height, &c);
            clamped += c;
        }
        if (clamped > 0)
            std::fprintf(stderr, "%s: clamped %zu out-of-frame coordinates\n", path.c_str(), clamped);
    }
    return res.tracks;
}

void write_loss_log(const std::string& path, const std::vector<double>& losses) {
    std::string body;
    char buf[64];
    for (std::size_t i = 0; i < losses.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "epoch %zu loss %.17g\n", i, losses[i]);
        body += buf;
    }
    write_file_atomic(path, body);
}

struct WindowedData {
    std::vector<PoseWindow> windows;
    std::vector<Matrix> tokens;
};

WindowedData tokenize_tracks(const std::vector<PoseTrack>& tracks, const RunConfig& c, int stride) {
    WindowedData data;
    for (const auto& t : tracks) {
        auto ws = extract_windows(t, c.beta, stride);
        for (auto& w : ws) data.windows.push_back(std::move(w));
    }
    data.tokens.reserve(data.windows.size());
    for (const auto& w : data.windows) data.tokens.push_back(tokenize(w, c.scheme).tokens);
    return data;
}

std::map<std::string, FrameRange> video_ranges(const std::vector<PoseTrack>& tracks) {
    std::map<std::string, FrameRange> ranges;
    for (const auto& t : tracks) {
        if (t.frames.empty()) continue;
        const long lo = t.frames.front().frame_index;
        const long hi = t.frames.back().frame_index;
        auto it = ranges.find(t.video_id);
        if (it == ranges.end()) {
            ranges[t.video_id] = {lo, hi};
        } else {
            it->second.first = std::min(it->second.first, lo);
            it->second.last = std::max(it->second.last, hi);
        }
    }
    return ranges;
}

void echo_config(const RunConfig& c, const std::string& name) {
    write_run_config(std::string(c.paths.out_dir) + "/" + name, c);
}

}  // namespace

std::string poses_train_path(const RunConfig& c) {
    return path_or(c.paths.poses_train, c.paths.out_dir + "/train_poses.csv");
}
std::string poses_test_path(const RunConfig& c) {
    return path_or(c.paths.poses_test, c.paths.out_dir + "/test_poses.csv");
}
std::string labels_train_path(const RunConfig& c) {
    return path_or(c.paths.labels_train, c.paths.out_dir + "/train_labels.csv");
}
std::string labels_test_path(const RunConfig& c) {
    return path_or(c.paths.labels_test, c.paths.out_dir + "/test_labels.csv");
}
std::string checkpoint_ctd_path(const RunConfig& c) {
    return path_or(c.paths.checkpoint_ctd, c.paths.out_dir + "/ctd.ckpt");
}
std::string checkpoint_path(const RunConfig& c) {
    return path_or(c.paths.checkpoint, c.paths.out_dir + "/uetd.ckpt");
}
std::string frame_scores_path(const RunConfig& c) {
    return path_or(c.paths.scores, c.paths.out_dir + "/frames.csv");
}
std::string report_path(const RunConfig& c) {
    return path_or(c.paths.report, c.paths.out_dir + "/report.txt");
}

void run_synth(const RunConfig& config) {
    config.validate();
    synth::BenchmarkSpec spec;
    spec.seed = config.seed;
    spec.train_videos = config.synth.train_videos;
    spec.test_videos = config.synth.test_videos;
    spec.persons_per_video = config.synth.persons_per_video;
    spec.n_frames = config.synth.n_frames;
    spec.k = config.k;
    const synth::Benchmark bench = synth::make_benchmark(spec);

    PoseFileSchema schema;
    schema.k = config.k;
    schema.normalized = true;
    save_pose_tracks(poses_train_path(config), bench.train_tracks, schema);
    save_pose_tracks(poses_test_path(config), bench.test_tracks, schema);
    write_labels(labels_train_path(config), bench.train_labels);
    write_labels(labels_test_path(config), bench.test_labels);
    echo_config(config, "synth_config.toml");
}

void run_train_ctd(const RunConfig& config) {
    config.validate();
    const auto tracks = load_tracks(poses_train_path(config), config.k);

    // Self-supervision safety: training data must be all-normal when labels
    // are available.
    const std::string label_path = labels_train_path(config);
    if (fs::exists(label_path)) {
        const LabeledFrames labels = read_labels(label_path);
        for (const auto& t : tracks)
            for (const auto& f : t.frames) {
                const auto it = labels.labels.find({t.video_id, f.frame_index});
                if (it != labels.labels.end() && it->second == 1)
                    throw std::runtime_error("refusing to train: labeled anomalous frame " +
                                             t.video_id + "/" + std::to_string(f.frame_index) +
                                             " in training data");
            }
    }

    const WindowedData data = tokenize_tracks(tracks, config, config.train_stride);
    if (data.tokens.empty())
        throw std::runtime_error("no training windows: tracks shorter than beta everywhere?");

    const uetd::TrainResult result =
        uetd::train_ctd(data.tokens, config.resolved_uetd(), config.resolved_train(uetd::Branch::Ctd));
    uetd::save_checkpoint(checkpoint_ctd_path(config), result.weights);
    write_loss_log(config.paths.out_dir + "/ctd_loss.log", result.epoch_losses);
    echo_config(config, "train_ctd_config.toml");
}

void run_train_ftd(const RunConfig& config) {
    config.validate();
    const uetd::UetdWeights pretrained = uetd::load_checkpoint(checkpoint_ctd_path(config));
    const uetd::UetdConfig expect = config.resolved_uetd();
    if (!(pretrained.config == expect))
        throw std::runtime_error(
            "checkpoint/config mismatch: checkpoint has [" + pretrained.config.to_text() +
            "] but the run config resolves to [" + expect.to_text() + "]");

    const auto tracks = load_tracks(poses_train_path(config), config.k);
    const WindowedData data = tokenize_tracks(tracks, config, config.pair_stride);
    const auto pairs = find_future_pairs(data.windows);
    if (pairs.empty())
        throw std::runtime_error("no future-prediction pairs: need windows exactly beta apart "
                                 "(is pair_stride a divisor of beta?)");

    const uetd::TrainResult result =
        uetd::train_ftd(data.tokens, pairs, pretrained, config.resolved_train(uetd::Branch::Ftd));
    uetd::save_checkpoint(checkpoint_path(config), result.weights);
    write_loss_log(config.paths.out_dir + "/ftd_loss.log", result.epoch_losses);
    echo_config(config, "train_ftd_config.toml");
}

void run_score(const RunConfig& config) {
    config.validate();
    const uetd::UetdWeights weights = uetd::load_checkpoint(checkpoint_path(config));
    const uetd::UetdConfig expect = config.resolved_uetd();
    if (!(weights.config == expect))
        throw std::runtime_error("checkpoint/config mismatch in score: checkpoint has [" +
                                 weights.config.to_text() + "] but the run config resolves to [" +
                                 expect.to_text() + "]");

    const auto tracks = load_tracks(poses_test_path(config), config.k);
    const TrackScores raw = score_tracks(tracks, weights, config.scheme, config.beta, config.stride);
    if (raw.cs.entries.empty()) throw std::runtime_error("no scoreable windows in test poses");

    const std::string out = config.paths.out_dir;
    write_score_series(out + "/cs.csv", raw.cs);
    write_score_series(out + "/fs.csv", raw.fs);

    const ScoreSeries cs_norm = min_max_normalize(raw.cs);
    const ScoreSeries fs_norm =
        raw.fs.entries.empty() ? raw.fs : min_max_normalize(raw.fs);
    const ScoreSeries hs = hybrid_score(cs_norm, fs_norm);
    write_score_series(out + "/hs.csv", hs);

    const FrameScoreSeries frames = frame_aggregate(hs, config.fill, video_ranges(tracks));
    write_frame_scores(frame_scores_path(config), frames);
    echo_config(config, "score_config.toml");
}

EvalReport run_eval(const RunConfig& config) {
    config.validate();
    const FrameScoreSeries scores = read_frame_scores(frame_scores_path(config));
    const LabeledFrames labels = read_labels(labels_test_path(config));
    const EvalReport report = evaluate(scores, labels, config.fingerprint());
    write_report(report_path(config), report);
    write_roc_table(config.paths.out_dir + "/roc.csv", report);
    return report;
}

std::string format_ablate_table(const std::vector<AblateRow>& rows) {
    std::ostringstream out;
    out << "# scheme relative auc_c auc_f auc_h eer_c eer_f eer_h\n";
    char buf[160];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof(buf), "%-6s %-3s %.6f %.6f %.6f %.6f %.6f %.6f\n",
                      scheme_name(r.scheme).c_str(), r.use_relative ? "yes" : "no", r.auc_c, r.auc_f,
                      r.auc_h, r.eer_c, r.eer_f, r.eer_h);
        out << buf;
    }
    return out.str();
}

std::vector<AblateRow> run_ablate(const RunConfig& config) {
    config.validate();
    if (!fs::exists(poses_train_path(config))) run_synth(config);

    const auto test_tracks = load_tracks(poses_test_path(config), config.k);
    const auto ranges = video_ranges(test_tracks);
    const LabeledFrames labels = read_labels(labels_test_path(config));

    std::vector<AblateRow> rows;
    for (const Scheme s : {Scheme::StPrp, Scheme::TPrp, Scheme::KsPrp, Scheme::FsPrp}) {
        for (const bool rel : {false, true}) {
            RunConfig cell = config;
            cell.scheme = {s, rel};
            cell.n_heads = cell.n_layers = cell.ff_dim = cell.model_dim = 0;
            cell.paths.poses_train = poses_train_path(config);
            cell.paths.poses_test = poses_test_path(config);
            cell.paths.labels_train = labels_train_path(config);
            cell.paths.labels_test = labels_test_path(config);
            cell.paths.checkpoint_ctd.clear();
            cell.paths.checkpoint.clear();
            cell.paths.scores.clear();
            cell.paths.report.clear();
            cell.paths.out_dir = config.paths.out_dir + "/ablate/" + scheme_name(s) +
                                 (rel ? "_rel" : "_norel");

            run_train_ctd(cell);
            run_train_ftd(cell);
            run_score(cell);

            AblateRow row;
            row.scheme = s;
            row.use_relative = rel;
            const std::string fp = cell.fingerprint();

            const EvalReport rep_h =
                evaluate(read_frame_scores(frame_scores_path(cell)), labels, fp);
            row.auc_h = rep_h.auc_roc;
            row.eer_h = rep_h.eer;
            write_report(cell.paths.out_dir + "/report_h.txt", rep_h);

            // Per-branch frame-level metrics from the emitted raw series.
            const auto eval_branch = [&](const std::string& file, double& auc, double& err) {
                const ScoreSeries norm = min_max_normalize(read_score_series(file));
                const FrameScoreSeries f = frame_aggregate(norm, config.fill, ranges);
                const EvalReport rep = evaluate(f, labels, fp);
                auc = rep.auc_roc;
                err = rep.eer;
            };
            eval_branch(cell.paths.out_dir + "/cs.csv", row.auc_c, row.eer_c);
            eval_branch(cell.paths.out_dir + "/fs.csv", row.auc_f, row.eer_f);
            rows.push_back(row);

            std::fprintf(stderr, "[ablate] %s relative=%s auc_h=%.4f\n", scheme_name(s).c_str(),
                         rel ? "yes" : "no", row.auc_h);
        }
    }
    write_file_atomic(config.paths.out_dir + "/ablate_results.txt", format_ablate_table(rows));
    return rows;
}

void run_dump_tokens(const RunConfig& config) {
    config.validate();
    const std::string pose_path =
        fs::exists(poses_test_path(config)) ? poses_test_path(config) : poses_train_path(config);
    const auto tracks = load_tracks(pose_path, config.k);

    std::ostringstream out;
    int emitted = 0;
    for (const auto& t : tracks) {
        if (emitted >= config.dump_limit) break;
        for (const auto& w : extract_windows(t, config.beta, config.stride)) {
            if (emitted >= config.dump_limit) break;
            dump_tokens(out, tokenize(w, config.scheme));
            ++emitted;
        }
    }
    if (emitted == 0) throw std::runtime_error("dump-tokens: no windows to dump");
    write_file_atomic(config.paths.out_dir + "/tokens.txt", out.str());
}

}  // namespace posewatch::cli
