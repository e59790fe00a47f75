#pragma once

#include <map>
#include <string>
#include <vector>

#include "posewatch/pose_types.hpp"
#include "posewatch/tokenizer.hpp"
#include "posewatch/uetd/model.hpp"

namespace posewatch {

enum class ScoreKind { Cs, Fs, Hs };

std::string score_kind_name(ScoreKind k);

struct ScoreEntry {
    std::string video_id;
    int person_id = 0;
    long frame_index = 0;
    double score = 0.0;
};

// Per-person scores, one entry per scored window, attached to the window's
// center frame t0 + beta/2.
struct ScoreSeries {
    ScoreKind kind = ScoreKind::Cs;
    std::vector<ScoreEntry> entries;
};

struct FrameScoreEntry {
    std::string video_id;
    long frame_index = 0;
    double score = 0.0;
};

// What frames with no scored person receive: the minimum observed frame
// score of the video ("no evidence of anomaly"), or a flat zero.
enum class FillPolicy { MinObserved, Zero };

struct FrameScoreSeries {
    std::vector<FrameScoreEntry> entries;  // at most one per (video, frame)
    FillPolicy fill = FillPolicy::MinObserved;
};

// Reconstruction error of one window under the CTD branch.
ScoreEntry ctd_score(const PoseWindow& window, const uetd::UetdWeights& w,
                     const TokenizationScheme& scheme);

// Prediction error of `next` decoded from `prev`'s encoding. The windows
// must be the same person, exactly beta frames apart.
ScoreEntry ftd_score(const PoseWindow& prev, const PoseWindow& next, const uetd::UetdWeights& w,
                     const TokenizationScheme& scheme);

// Scores every window (CS) and every window with a predecessor beta frames
// back (FS). Each window is encoded once; work is split across threads per
// track with deterministic output order.
struct TrackScores {
    ScoreSeries cs;  // one entry per window
    ScoreSeries fs;  // entries only where a predecessor window exists
};
TrackScores score_tracks(const std::vector<PoseTrack>& tracks, const uetd::UetdWeights& w,
                         const TokenizationScheme& scheme, int beta, int stride, int threads = 0);

// s' = (s - min) / (max - min) over the whole series; a constant series maps
// to all zeros. Throws on an empty series.
ScoreSeries min_max_normalize(const ScoreSeries& series);

// HS = 0.5 * CS' + 0.5 * FS', joined on (video, person, frame). Frames
// present in only one input keep that input's value (the first windows of a
// track have no future-branch score).
ScoreSeries hybrid_score(const ScoreSeries& cs_norm, const ScoreSeries& fs_norm);

struct FrameRange {
    long first = 0;
    long last = 0;  // inclusive
};

// Per (video, frame): max over the persons scored at that frame. Frames of
// the video range with no entry receive the fill policy value. When `ranges`
// lacks a video, the range observed in the series is used.
FrameScoreSeries frame_aggregate(const ScoreSeries& series, FillPolicy fill,
                                 const std::map<std::string, FrameRange>& ranges = {});

// Newline-delimited "video_id,frame_index,person_id|-,kind,score" with a
// header; round-trips doubles exactly.
void write_score_series(const std::string& path, const ScoreSeries& series);
void write_frame_scores(const std::string& path, const FrameScoreSeries& series);
ScoreSeries read_score_series(const std::string& path);
FrameScoreSeries read_frame_scores(const std::string& path);

}  // namespace posewatch
