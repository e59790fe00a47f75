#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <set>

#include "posewatch/io_util.hpp"
#include "posewatch/pose_io.hpp"
#include "test_util.hpp"

using namespace posewatch;

namespace {

std::string write_pose_file(const std::string& dir, const std::string& name,
                            const std::string& contents) {
    const std::string path = dir + "/" + name;
    write_file_atomic(path, contents);
    return path;
}

std::string record(const std::string& video, long frame, int person, int k, double x0 = 0.1) {
    std::string line = video + "," + std::to_string(frame) + "," + std::to_string(person);
    char buf[64];
    for (int i = 0; i < k; ++i) {
        std::snprintf(buf, sizeof(buf), ",%.6f,%.6f,0.9", x0 + 0.001 * i, 0.2 + 0.001 * frame);
        line += buf;
    }
    return line + "\n";
}

PoseTrack make_track(const std::vector<long>& frame_indices, int k = 2) {
    PoseTrack t;
    t.video_id = "v";
    t.person_id = 0;
    for (const long f : frame_indices) {
        PoseFrame frame;
        frame.frame_index = f;
        for (int i = 0; i < k; ++i)
            frame.keypoints.push_back({0.01 * static_cast<double>(f) + i, 0.5 + 0.002 * i});
        t.frames.push_back(frame);
    }
    return t;
}

// Brute force: every start t such that frames t..t+beta-1 are all present
// and t is reachable from its run start by whole strides.
std::vector<long> window_starts_oracle(const PoseTrack& track, int beta, int stride) {
    std::set<long> present;
    for (const auto& f : track.frames) present.insert(f.frame_index);
    std::vector<long> starts;
    for (const auto& f : track.frames) {
        const long t = f.frame_index;
        bool ok = true;
        for (int i = 0; i < beta && ok; ++i) ok = present.count(t + i) > 0;
        if (!ok) continue;
        long run_start = t;
        while (present.count(run_start - 1)) --run_start;
        if ((t - run_start) % stride == 0) starts.push_back(t);
    }
    return starts;
}

}  // namespace

TEST_CASE("load: two persons, thirty frames each") {
    const std::string dir = testutil::temp_dir("pose_io_basic");
    std::string contents = "# posetrack v1 k=17 coords=normalized\n";
    for (int f = 0; f < 30; ++f) {
        contents += record("vid", f, 0, 17);
        contents += record("vid", f, 1, 17);
    }
    const auto res = load_pose_tracks(write_pose_file(dir, "a.csv", contents));
    REQUIRE(res.tracks.size() == 2);
    CHECK(res.tracks[0].frames.size() == 30);
    CHECK(res.tracks[1].frames.size() == 30);
    CHECK(res.schema.k == 17);
    CHECK(res.report.records_rejected == 0);
}

TEST_CASE("load: empty and headerless files fail") {
    const std::string dir = testutil::temp_dir("pose_io_empty");
    CHECK_THROWS(load_pose_tracks(write_pose_file(dir, "empty.csv", "")));
    CHECK_THROWS(load_pose_tracks(write_pose_file(dir, "no_header.csv", "vid,0,0,0.1,0.2\n")));
    CHECK_THROWS(load_pose_tracks(dir + "/does_not_exist.csv"));
}

TEST_CASE("load: one short record among 100 valid ones is rejected with a diagnostic") {
    const std::string dir = testutil::temp_dir("pose_io_reject");
    std::string contents = "# posetrack v1 k=17 coords=normalized\n";
    for (int f = 0; f < 50; ++f) contents += record("vid", f, 0, 17);
    contents += record("vid", 50, 0, 16);  // one keypoint short
    for (int f = 50; f < 100; ++f) contents += record("vid", f, 0, 17);
    const auto res = load_pose_tracks(write_pose_file(dir, "b.csv", contents));
    REQUIRE(res.tracks.size() == 1);
    CHECK(res.tracks[0].frames.size() == 100);
    CHECK(res.report.records_total == 101);
    CHECK(res.report.records_rejected == 1);
    REQUIRE(res.report.diagnostics.size() == 1);
    CHECK(res.report.diagnostics[0].find("fields") != std::string::npos);
}

TEST_CASE("load: frames come out sorted and confidences are optional") {
    const std::string dir = testutil::temp_dir("pose_io_sort");
    std::string contents = "# posetrack v1 k=2 coords=normalized\n";
    contents += "vid,5,0,0.1,0.2,0.3,0.4\n";  // no confidence fields
    contents += "vid,2,0,0.1,0.2,0.9,0.3,0.4,0.9\n";
    contents += "vid,9,0,0.1,0.2,0.3,0.4\n";
    const auto res = load_pose_tracks(write_pose_file(dir, "c.csv", contents));
    REQUIRE(res.tracks.size() == 1);
    REQUIRE(res.tracks[0].frames.size() == 3);
    CHECK(res.tracks[0].frames[0].frame_index == 2);
    CHECK(res.tracks[0].frames[1].frame_index == 5);
    CHECK(res.tracks[0].frames[2].frame_index == 9);
}

TEST_CASE("save/load round trip") {
    const std::string dir = testutil::temp_dir("pose_io_rt");
    const PoseTrack t = make_track({0, 1, 2, 3, 10, 11});
    PoseFileSchema schema;
    schema.k = 2;
    save_pose_tracks(dir + "/rt.csv", {t}, schema);
    const auto res = load_pose_tracks(dir + "/rt.csv");
    REQUIRE(res.tracks.size() == 1);
    REQUIRE(res.tracks[0].frames.size() == t.frames.size());
    for (std::size_t i = 0; i < t.frames.size(); ++i) {
        CHECK(res.tracks[0].frames[i].frame_index == t.frames[i].frame_index);
        for (int kp = 0; kp < 2; ++kp) {
            CHECK(res.tracks[0].frames[i].keypoints[kp].x == t.frames[i].keypoints[kp].x);
            CHECK(res.tracks[0].frames[i].keypoints[kp].y == t.frames[i].keypoints[kp].y);
        }
    }
}

TEST_CASE("normalize_coordinates") {
    PoseTrack t;
    t.video_id = "v";
    PoseFrame f;
    f.frame_index = 0;
    f.keypoints = {{960.0, 540.0}, {0.0, 0.0}, {2000.0, 540.0}};
    t.frames.push_back(f);

    std::size_t clamped = 0;
    const PoseTrack n = normalize_coordinates(t, 1920.0, 1080.0, &clamped);
    CHECK(n.frames[0].keypoints[0].x == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(n.frames[0].keypoints[0].y == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(n.frames[0].keypoints[1].x == 0.0);
    CHECK(n.frames[0].keypoints[1].y == 0.0);
    CHECK(n.frames[0].keypoints[2].x == 1.0);  // clamped from 2000/1920
    CHECK(clamped == 1);

    SUBCASE("idempotent on already-normalized input with unit dimensions") {
        const PoseTrack again = normalize_coordinates(n, 1.0, 1.0);
        for (std::size_t i = 0; i < 3; ++i) {
            CHECK(again.frames[0].keypoints[i].x == n.frames[0].keypoints[i].x);
            CHECK(again.frames[0].keypoints[i].y == n.frames[0].keypoints[i].y);
        }
    }
    SUBCASE("non-positive dimensions rejected") {
        CHECK_THROWS_AS(normalize_coordinates(t, 0.0, 1080.0), std::invalid_argument);
        CHECK_THROWS_AS(normalize_coordinates(t, 1920.0, -1.0), std::invalid_argument);
    }
}

TEST_CASE("extract_windows: counts and boundaries") {
    std::vector<long> frames;
    for (long f = 0; f < 30; ++f) frames.push_back(f);
    const PoseTrack t = make_track(frames);

    const auto w = extract_windows(t, 24, 1);
    REQUIRE(w.size() == 7);
    for (int i = 0; i < 7; ++i) CHECK(w[i].start_frame == i);

    CHECK(extract_windows(make_track({0, 1, 2}), 24, 1).empty());

    std::vector<long> exact;
    for (long f = 0; f < 24; ++f) exact.push_back(f);
    CHECK(extract_windows(make_track(exact), 24, 1).size() == 1);

    CHECK_THROWS_AS(extract_windows(t, 23, 1), std::invalid_argument);
    CHECK_THROWS_AS(extract_windows(t, 24, 0), std::invalid_argument);
}

TEST_CASE("extract_windows: gaps block windows; strides restart per run") {
    std::vector<long> frames;
    for (long f = 0; f <= 9; ++f) frames.push_back(f);
    for (long f = 20; f <= 29; ++f) frames.push_back(f);
    const PoseTrack t = make_track(frames);
    const auto w = extract_windows(t, 8, 4);
    REQUIRE(w.size() == 2);
    CHECK(w[0].start_frame == 0);
    CHECK(w[1].start_frame == 20);
}

TEST_CASE("extract_windows matches the brute-force enumerator on random gapped tracks") {
    Rng rng(1234);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<long> frames;
        long f = static_cast<long>(rng.below(5));
        const int n = 10 + static_cast<int>(rng.below(60));
        for (int i = 0; i < n; ++i) {
            frames.push_back(f);
            f += 1 + (rng.uniform() < 0.1 ? static_cast<long>(rng.below(6)) : 0);
        }
        const PoseTrack t = make_track(frames, 1);
        const int beta = 2 * (1 + static_cast<int>(rng.below(6)));
        const int stride = 1 + static_cast<int>(rng.below(4));
        const auto windows = extract_windows(t, beta, stride);
        const auto expected = window_starts_oracle(t, beta, stride);
        REQUIRE(windows.size() == expected.size());
        for (std::size_t i = 0; i < windows.size(); ++i)
            CHECK(windows[i].start_frame == expected[i]);
    }
}

TEST_CASE("extract_windows with stride 1 yields max(0, L - beta + 1) windows on gap-free tracks") {
    Rng rng(99);
    for (int trial = 0; trial < 50; ++trial) {
        const int len = static_cast<int>(rng.below(40));
        std::vector<long> frames;
        for (long f = 0; f < len; ++f) frames.push_back(f);
        const PoseTrack t = make_track(frames, 1);
        const int beta = 2 * (1 + static_cast<int>(rng.below(5)));
        const long expected = std::max(0, len - beta + 1);
        CHECK(static_cast<long>(extract_windows(t, beta, 1).size()) == expected);
    }
}

TEST_CASE("relative_pose: fixtures and laws") {
    SUBCASE("single keypoint fixture") {
        Matrix abs(2, 2);
        abs(0, 0) = 1.0;
        abs(0, 1) = 2.0;
        abs(1, 0) = 3.0;
        abs(1, 1) = 5.0;
        const Matrix rel = relative_pose(abs);
        CHECK(rel(0, 0) == 0.0);
        CHECK(rel(0, 1) == 0.0);
        CHECK(rel(1, 0) == 2.0);
        CHECK(rel(1, 1) == 3.0);
    }
    SUBCASE("constant pose gives an all-zero relative block") {
        Matrix abs(6, 4, 0.37);
        const Matrix rel = relative_pose(abs);
        for (const double v : rel.data) CHECK(v == 0.0);
    }
    SUBCASE("row zero is exactly zero and reconstruction is exact") {
        Rng rng(7);
        for (int trial = 0; trial < 100; ++trial) {
            const auto w = testutil::random_window(8, 3, rng);
            for (int j = 0; j < w.relative.cols; ++j) CHECK(w.relative(0, j) == 0.0);
            for (int t = 0; t < w.beta; ++t)
                for (int j = 0; j < w.relative.cols; ++j)
                    CHECK(w.relative(t, j) + w.absolute(0, j) == w.absolute(t, j));
        }
    }
    SUBCASE("translation invariance") {
        Rng rng(8);
        auto w = testutil::random_window(10, 4, rng);
        Matrix shifted = w.absolute;
        for (int t = 0; t < shifted.rows; ++t)
            for (int j = 0; j < shifted.cols; ++j) shifted(t, j) += j < 4 ? 0.25 : -0.125;
        const Matrix rel_shifted = relative_pose(shifted);
        for (std::size_t i = 0; i < rel_shifted.size(); ++i)
            CHECK(rel_shifted.data[i] == doctest::Approx(w.relative.data[i]).epsilon(1e-12));
    }
}

TEST_CASE("find_future_pairs pairs windows exactly beta apart per person") {
    std::vector<long> frames;
    for (long f = 0; f < 72; ++f) frames.push_back(f);
    PoseTrack a = make_track(frames);
    PoseTrack b = make_track(frames);
    b.person_id = 1;
    std::vector<PoseWindow> windows;
    for (const auto& t : {a, b})
        for (auto& w : extract_windows(t, 24, 24)) windows.push_back(w);
    REQUIRE(windows.size() == 6);  // three tiles per person
    const auto pairs = find_future_pairs(windows);
    REQUIRE(pairs.size() == 4);
    for (const auto& [p, n] : pairs) {
        CHECK(windows[p].person_id == windows[n].person_id);
        CHECK(windows[n].start_frame == windows[p].start_frame + 24);
    }
}
