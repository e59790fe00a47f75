#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "posewatch/pose_types.hpp"

namespace posewatch {

// Pose-track files are newline-delimited CSV records
//   video_id, frame_index, person_id, x1, y1, c1, ..., xk, yk, ck
// preceded by a header line declaring the keypoint count and coordinate
// space, e.g.
//   # posetrack v1 k=17 coords=pixel:1920x1080
//   # posetrack v1 k=17 coords=normalized
// Confidence fields are optional per record (2k or 3k coordinate fields);
// they are parsed and discarded, the model consumes only (x, y).
struct PoseFileSchema {
    int k = 17;
    bool normalized = true;
    double frame_width = 0.0;   // set when !normalized
    double frame_height = 0.0;
};

struct LoadReport {
    std::size_t records_total = 0;
    std::size_t records_rejected = 0;
    std::vector<std::string> diagnostics;  // capped, one line per rejection
};

struct LoadResult {
    std::vector<PoseTrack> tracks;
    PoseFileSchema schema;
    LoadReport report;
};

// Loads pose tracks, one per (video_id, person_id), frames sorted.
// expected_k = 0 accepts whatever the header declares. Throws on unreadable
// files, on a malformed header, and when no valid record survives.
LoadResult load_pose_tracks(const std::string& path, int expected_k = 0);

void save_pose_tracks(const std::string& path, const std::vector<PoseTrack>& tracks,
                      const PoseFileSchema& schema);

// x' = x / frame_width, y' = y / frame_height, clamped into [0, 1].
// clamped_out, when given, receives the number of clamped coordinates.
PoseTrack normalize_coordinates(const PoseTrack& track, double frame_width, double frame_height,
                                std::size_t* clamped_out = nullptr);

// Slices a track into beta-frame windows. Windows never span gaps: within
// each run of consecutive frame indices, candidate starts are
// run_start + j * stride. beta must be even (the tokenizer splits the
// window in half and scores attach to frame t0 + beta/2).
std::vector<PoseWindow> extract_windows(const PoseTrack& track, int beta, int stride);

// relative[t] = absolute[t] - absolute[0]; row 0 comes out exactly zero.
Matrix relative_pose(const Matrix& window_absolute);

// Indices (prev, next) into `windows` where next starts exactly beta frames
// after prev for the same (video, person) — the future-prediction pairing.
std::vector<std::pair<int, int>> find_future_pairs(const std::vector<PoseWindow>& windows);

}  // namespace posewatch
