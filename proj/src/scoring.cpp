#include "posewatch/scoring.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "posewatch/io_util.hpp"
#include "posewatch/pose_io.hpp"

namespace posewatch {

std::string score_kind_name(ScoreKind k) {
    switch (k) {
        case ScoreKind::Cs: return "CS";
        case ScoreKind::Fs: return "FS";
        case ScoreKind::Hs: return "HS";
    }
    return "?";
}

namespace {

ScoreKind score_kind_from_name(const std::string& s) {
    if (s == "CS") return ScoreKind::Cs;
    if (s == "FS") return ScoreKind::Fs;
    if (s == "HS") return ScoreKind::Hs;
    throw std::runtime_error("unknown score kind: " + s);
}

}  // namespace

ScoreEntry ctd_score(const PoseWindow& window, const uetd::UetdWeights& w,
                     const TokenizationScheme& scheme) {
    const TokenSequence seq = tokenize(window, scheme);
    const Matrix pe = uetd::make_positional(w.config);
    const Matrix memory = uetd::encode_eval(w, seq.tokens, pe);
    const Matrix out = uetd::decode_eval(w, memory, uetd::Branch::Ctd);
    return {window.video_id, window.person_id, window.center_frame(),
            uetd::mse_loss(out, seq.tokens)};
}

ScoreEntry ftd_score(const PoseWindow& prev, const PoseWindow& next, const uetd::UetdWeights& w,
                     const TokenizationScheme& scheme) {
    if (prev.video_id != next.video_id || prev.person_id != next.person_id ||
        next.start_frame != prev.start_frame + prev.beta)
        throw std::invalid_argument("ftd_score: windows must be the same person exactly beta apart");
    const TokenSequence prev_seq = tokenize(prev, scheme);
    const TokenSequence next_seq = tokenize(next, scheme);
    const Matrix pe = uetd::make_positional(w.config);
    const Matrix memory = uetd::encode_eval(w, prev_seq.tokens, pe);
    const Matrix out = uetd::decode_eval(w, memory, uetd::Branch::Ftd);
    return {next.video_id, next.person_id, next.center_frame(), uetd::mse_loss(out, next_seq.tokens)};
}

TrackScores score_tracks(const std::vector<PoseTrack>& tracks, const uetd::UetdWeights& w,
                         const TokenizationScheme& scheme, int beta, int stride, int threads) {
    const Matrix pe = uetd::make_positional(w.config);

    struct PerTrack {
        std::vector<ScoreEntry> cs, fs;
    };
    std::vector<PerTrack> results(tracks.size());

    auto score_one = [&](std::size_t ti) {
        const auto windows = extract_windows(tracks[ti], beta, stride);
        if (windows.empty()) return;
        std::vector<Matrix> tokens(windows.size());
        std::vector<Matrix> memories(windows.size());
        for (std::size_t i = 0; i < windows.size(); ++i) {
            tokens[i] = tokenize(windows[i], scheme).tokens;
            memories[i] = uetd::encode_eval(w, tokens[i], pe);
        }
        std::map<long, std::size_t> by_start;
        for (std::size_t i = 0; i < windows.size(); ++i) by_start[windows[i].start_frame] = i;

        auto& out = results[ti];
        for (std::size_t i = 0; i < windows.size(); ++i) {
            const Matrix rec = uetd::decode_eval(w, memories[i], uetd::Branch::Ctd);
            out.cs.push_back({windows[i].video_id, windows[i].person_id, windows[i].center_frame(),
                              uetd::mse_loss(rec, tokens[i])});
            const auto prev = by_start.find(windows[i].start_frame - beta);
            if (prev != by_start.end()) {
                const Matrix fut = uetd::decode_eval(w, memories[prev->second], uetd::Branch::Ftd);
                out.fs.push_back({windows[i].video_id, windows[i].person_id,
                                  windows[i].center_frame(), uetd::mse_loss(fut, tokens[i])});
            }
        }
    };

    int hw = threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency());
    if (hw < 1) hw = 1;
    if (hw == 1 || tracks.size() <= 1) {
        for (std::size_t i = 0; i < tracks.size(); ++i) score_one(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> workers;
        const int n_workers = std::min<std::size_t>(hw, tracks.size());
        for (int t = 0; t < n_workers; ++t)
            workers.emplace_back([&]() {
                for (std::size_t i = next.fetch_add(1); i < tracks.size(); i = next.fetch_add(1))
                    score_one(i);
            });
        for (auto& wk : workers) wk.join();
    }

    TrackScores out;
    out.cs.kind = ScoreKind::Cs;
    out.fs.kind = ScoreKind::Fs;
    for (auto& r : results) {
        out.cs.entries.insert(out.cs.entries.end(), r.cs.begin(), r.cs.end());
        out.fs.entries.insert(out.fs.entries.end(), r.fs.begin(), r.fs.end());
    }
    return out;
}

ScoreSeries min_max_normalize(const ScoreSeries& series) {
    if (series.entries.empty()) throw std::invalid_argument("min_max_normalize: empty series");
    double lo = series.entries[0].score, hi = lo;
    for (const auto& e : series.entries) {
        lo = std::min(lo, e.score);
        hi = std::max(hi, e.score);
    }
    ScoreSeries out = series;
    if (hi == lo) {
        for (auto& e : out.entries) e.score = 0.0;
        return out;
    }
    const double range = hi - lo;
    for (auto& e : out.entries) e.score = (e.score - lo) / range;
    return out;
}

ScoreSeries hybrid_score(const ScoreSeries& cs_norm, const ScoreSeries& fs_norm) {
    std::map<std::tuple<std::string, int, long>, double> fs_by_key;
    for (const auto& e : fs_norm.entries) fs_by_key[{e.video_id, e.person_id, e.frame_index}] = e.score;

    ScoreSeries out;
    out.kind = ScoreKind::Hs;
    std::map<std::tuple<std::string, int, long>, bool> seen;
    for (const auto& e : cs_norm.entries) {
        const auto key = std::make_tuple(e.video_id, e.person_id, e.frame_index);
        seen[key] = true;
        const auto fs = fs_by_key.find(key);
        const double hs = fs == fs_by_key.end() ? e.score : 0.5 * e.score + 0.5 * fs->second;
        out.entries.push_back({e.video_id, e.person_id, e.frame_index, hs});
    }
    // Future-branch entries with no reconstruction counterpart fall back the
    // same way.
    for (const auto& e : fs_norm.entries)
        if (!seen.count({e.video_id, e.person_id, e.frame_index})) out.entries.push_back(e);
    return out;
}

FrameScoreSeries frame_aggregate(const ScoreSeries& series, FillPolicy fill,
                                 const std::map<std::string, FrameRange>& ranges) {
    std::map<std::string, std::map<long, double>> best;  // video -> frame -> max score
    for (const auto& e : series.entries) {
        auto& m = best[e.video_id];
        const auto it = m.find(e.frame_index);
        if (it == m.end() || e.score > it->second) m[e.frame_index] = e.score;
    }

    FrameScoreSeries out;
    out.fill = fill;
    for (auto& [video, frames] : best) {
        FrameRange range;
        const auto r = ranges.find(video);
        if (r != ranges.end()) {
            range = r->second;
        } else {
            range.first = frames.begin()->first;
            range.last = frames.rbegin()->first;
        }
        double fill_value = 0.0;
        if (fill == FillPolicy::MinObserved) {
            fill_value = frames.begin()->second;
            for (const auto& [f, s] : frames) fill_value = std::min(fill_value, s);
        }
        for (long f = range.first; f <= range.last; ++f) {
            const auto it = frames.find(f);
            out.entries.push_back({video, f, it != frames.end() ? it->second : fill_value});
        }
    }
    return out;
}

void write_score_series(const std::string& path, const ScoreSeries& series) {
    std::string body = "# posewatch-scores v1\n# video_id,frame_index,person_id,kind,score\n";
    char buf[96];
    const std::string kind = score_kind_name(series.kind);
    for (const auto& e : series.entries) {
        std::snprintf(buf, sizeof(buf), ",%ld,%d,%s,%.17g\n", e.frame_index, e.person_id,
                      kind.c_str(), e.score);
        body += e.video_id;
        body += buf;
    }
    write_file_atomic(path, body);
}

void write_frame_scores(const std::string& path, const FrameScoreSeries& series) {
    std::string body = "# posewatch-scores v1\n# video_id,frame_index,person_id,kind,score\n";
    char buf[96];
    for (const auto& e : series.entries) {
        std::snprintf(buf, sizeof(buf), ",%ld,-,HS,%.17g\n", e.frame_index, e.score);
        body += e.video_id;
        body += buf;
    }
    write_file_atomic(path, body);
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) out.push_back(f);
    return out;
}

}  // namespace

ScoreSeries read_score_series(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open score file: " + path);
    ScoreSeries out;
    std::string line;
    bool kind_set = false;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        const auto f = split_line(line);
        if (f.size() != 5) throw std::runtime_error(path + ": bad score record: " + line);
        if (f[2] == "-") throw std::runtime_error(path + ": frame-level record in person series");
        ScoreEntry e{f[0], std::stoi(f[2]), std::stol(f[1]), std::stod(f[4])};
        if (!kind_set) {
            out.kind = score_kind_from_name(f[3]);
            kind_set = true;
        }
        out.entries.push_back(std::move(e));
    }
    return out;
}

FrameScoreSeries read_frame_scores(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open score file: " + path);
    FrameScoreSeries out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        const auto f = split_line(line);
        if (f.size() != 5) throw std::runtime_error(path + ": bad score record: " + line);
        out.entries.push_back({f[0], std::stol(f[1]), std::stod(f[4])});
    }
    return out;
}

}  // namespace posewatch
