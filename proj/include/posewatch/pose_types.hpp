#pragma once

#include <string>
#include <vector>

#include "posewatch/matrix.hpp"

namespace posewatch {

struct Keypoint {
    double x = 0.0;
    double y = 0.0;
};

struct PoseFrame {
    long frame_index = 0;
    std::vector<Keypoint> keypoints;  // exactly k entries, fixed order
};

// One person's keypoints over one video. Frames are sorted by frame_index
// and strictly increasing; gaps are allowed between frames.
struct PoseTrack {
    std::string video_id;
    int person_id = 0;
    std::vector<PoseFrame> frames;

    int keypoint_count() const { return frames.empty() ? 0 : static_cast<int>(frames[0].keypoints.size()); }
};

// A beta-frame gap-free slice of a track. Coordinate blocks are beta x 2k,
// row t = [x_0 .. x_{k-1}, y_0 .. y_{k-1}]. The relative block is the
// absolute block minus its first row, so relative row 0 is identically zero.
struct PoseWindow {
    std::string video_id;
    int person_id = 0;
    long start_frame = 0;
    int beta = 0;
    int k = 0;
    Matrix absolute;
    Matrix relative;

    double abs_x(int t, int kp) const { return absolute(t, kp); }
    double abs_y(int t, int kp) const { return absolute(t, k + kp); }
    double rel_x(int t, int kp) const { return relative(t, kp); }
    double rel_y(int t, int kp) const { return relative(t, k + kp); }

    // The frame a window's anomaly score is assigned to.
    long center_frame() const { return start_frame + beta / 2; }
};

}  // namespace posewatch
