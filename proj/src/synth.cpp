#include "posewatch/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "posewatch/rng.hpp"

namespace posewatch::synth {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Stylized 17-joint template (x right, y down, units of body height around
// the body center) and how strongly each joint swings with the gait.
struct JointTemplate {
    double x, y, swing;
};
constexpr JointTemplate kJoints[17] = {
    {0.00, -0.50, 0.25},   // nose
    {-0.03, -0.53, 0.25},  // eyes
    {0.03, -0.53, 0.25},
    {-0.06, -0.50, 0.25},  // ears
    {0.06, -0.50, 0.25},
    {-0.10, -0.32, 0.40},  // shoulders
    {0.10, -0.32, 0.40},
    {-0.14, -0.15, 0.80},  // elbows
    {0.14, -0.15, 0.80},
    {-0.16, 0.02, 1.00},   // wrists
    {0.16, 0.02, 1.00},
    {-0.07, 0.00, 0.40},   // hips
    {0.07, 0.00, 0.40},
    {-0.08, 0.25, 0.80},   // knees
    {0.08, 0.25, 0.80},
    {-0.09, 0.50, 1.00},   // ankles
    {0.09, 0.50, 1.00},
};

JointTemplate joint_template(int kp) {
    JointTemplate t = kJoints[kp % 17];
    // Joints beyond the template fan out slightly so they stay distinct.
    const int wrap = kp / 17;
    t.x += 0.012 * wrap;
    t.y += 0.017 * wrap;
    return t;
}

std::string video_name(const SynthScenario& sc, int video) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%s%03d", sc.video_prefix.c_str(), video);
    return buf;
}

PoseTrack gen_track(const SynthScenario& sc, int video, int person) {
    const int track_index = video * sc.n_persons + person;
    Rng rng(Rng::mix(sc.seed, 0x6a17ull, static_cast<std::uint64_t>(track_index)));

    const double height = rng.uniform(0.19, 0.27);
    const double freq = rng.uniform(sc.stride_freq_lo, sc.stride_freq_hi);
    const double amp = rng.uniform(sc.amplitude_lo, sc.amplitude_hi);
    const double speed = rng.uniform(sc.drift_lo, sc.drift_hi);

    // The walker follows a circular path, so an arbitrarily long clip stays
    // in frame at full walking speed. Radius and center leave room for the
    // body and the limb swing.
    const double margin = 0.56 * height + sc.amplitude_hi + 0.02;
    const double r_max = std::min(0.24, std::max(0.06, 0.47 - margin));
    const double radius = rng.uniform(std::min(0.12, r_max), r_max);
    const double cx = rng.uniform(margin + radius, 1.0 - margin - radius);
    const double cy = rng.uniform(margin + radius, 1.0 - margin - radius);
    const double omega = (rng.uniform() < 0.5 ? 1.0 : -1.0) * speed / radius;
    const double theta0 = rng.uniform(0.0, 2.0 * kPi);

    // Per-joint gait phases; left/right limb pairs swing in opposition.
    std::vector<double> phase(sc.k), swing(sc.k);
    const double gait_phase = rng.uniform(0.0, 2.0 * kPi);
    for (int kp = 0; kp < sc.k; ++kp) {
        const JointTemplate t = joint_template(kp);
        const bool left = t.x < 0.0;
        phase[kp] = gait_phase + (left ? 0.0 : kPi) + rng.uniform(-0.3, 0.3);
        swing[kp] = t.swing;
    }

    PoseTrack track;
    track.video_id = video_name(sc, video);
    track.person_id = person;
    track.frames.resize(sc.n_frames);
    for (int t = 0; t < sc.n_frames; ++t) {
        PoseFrame& frame = track.frames[t];
        frame.frame_index = t;
        frame.keypoints.resize(sc.k);
        const double theta = theta0 + omega * t;
        const double px = cx + radius * std::cos(theta);
        const double py = cy + radius * std::sin(theta);
        const double bob = 0.25 * amp * std::sin(2.0 * (2.0 * kPi * freq * t) + gait_phase);
        for (int kp = 0; kp < sc.k; ++kp) {
            const JointTemplate jt = joint_template(kp);
            const double osc = swing[kp] * amp * std::sin(2.0 * kPi * freq * t + phase[kp]);
            frame.keypoints[kp].x = px + jt.x * height + osc;
            frame.keypoints[kp].y = py + jt.y * height + 0.5 * osc + bob;
        }
    }
    return track;
}

void clamp_track(PoseTrack& track) {
    for (auto& f : track.frames)
        for (auto& kp : f.keypoints) {
            kp.x = std::clamp(kp.x, 0.0, 1.0);
            kp.y = std::clamp(kp.y, 0.0, 1.0);
        }
}

double mean_step(const PoseTrack& track) {
    double sum = 0.0;
    long n = 0;
    for (std::size_t t = 1; t < track.frames.size(); ++t) {
        for (std::size_t kp = 0; kp < track.frames[t].keypoints.size(); ++kp) {
            const auto& a = track.frames[t - 1].keypoints[kp];
            const auto& b = track.frames[t].keypoints[kp];
            sum += std::hypot(b.x - a.x, b.y - a.y);
            ++n;
        }
    }
    return n ? sum / n : 0.0;
}

std::vector<Keypoint> translated(const std::vector<Keypoint>& kps, double dx, double dy) {
    std::vector<Keypoint> out = kps;
    for (auto& kp : out) {
        kp.x += dx;
        kp.y += dy;
    }
    return out;
}

}  // namespace

std::string anomaly_name(AnomalyType t) {
    switch (t) {
        case AnomalyType::VelocitySpike: return "velocity_spike";
        case AnomalyType::Freeze: return "freeze";
        case AnomalyType::JointScramble: return "joint_scramble";
        case AnomalyType::ReverseMotion: return "reverse_motion";
    }
    return "?";
}

std::vector<PoseTrack> gen_normal_tracks(const SynthScenario& scenario) {
    if (scenario.n_videos < 1 || scenario.n_persons < 1 || scenario.n_frames < 1 || scenario.k < 1)
        throw std::invalid_argument("gen_normal_tracks: bad scenario sizes");
    std::vector<PoseTrack> tracks;
    tracks.reserve(scenario.n_tracks());
    for (int v = 0; v < scenario.n_videos; ++v)
        for (int p = 0; p < scenario.n_persons; ++p) tracks.push_back(gen_track(scenario, v, p));
    return tracks;
}

LabeledFrames inject_anomaly(PoseTrack& track, const AnomalySpec& anomaly, std::uint64_t seed) {
    const long n = static_cast<long>(track.frames.size());
    if (anomaly.begin < 0 || anomaly.end > n || anomaly.begin > anomaly.end)
        throw std::invalid_argument("inject_anomaly: span out of range");

    const long b = anomaly.begin, e = anomaly.end;
    Rng rng(Rng::mix(seed, static_cast<std::uint64_t>(b) * 1315423911ull + e,
                     static_cast<std::uint64_t>(anomaly.track_index)));

    if (b < e) {
        switch (anomaly.type) {
            case AnomalyType::VelocitySpike: {
                // Violent flailing: every keypoint jumps along a fresh random
                // direction every frame, an order of magnitude above the
                // normal step, so pose shape and dynamics both break. First
                // and last span frames stay put so entry and exit are clean.
                const double step = mean_step(track);
                const double d = 9.0 * std::max(step, 1e-4);
                for (long t = b + 1; t + 1 < e; ++t) {
                    for (auto& kp : track.frames[t].keypoints) {
                        const double dir = rng.uniform(0.0, 2.0 * kPi);
                        kp.x += d * std::cos(dir);
                        kp.y += d * std::sin(dir);
                    }
                }
                break;
            }
            case AnomalyType::Freeze: {
                // Hold the entry pose for the span, then replay the original
                // motion delayed by the span length: the person pauses and
                // continues, smooth at both boundaries.
                std::vector<std::vector<Keypoint>> orig;
                for (long t = b; t < n; ++t) orig.push_back(track.frames[t].keypoints);
                for (long t = b; t < e; ++t) track.frames[t].keypoints = orig[0];
                for (long t = e; t < n; ++t) track.frames[t].keypoints = orig[t - e + 1];
                break;
            }
            case AnomalyType::JointScramble: {
                for (long t = b; t < e; ++t) {
                    auto& kps = track.frames[t].keypoints;
                    std::vector<int> perm(kps.size());
                    for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = static_cast<int>(i);
                    shuffle(perm, rng);
                    auto orig = kps;
                    for (std::size_t i = 0; i < kps.size(); ++i) kps[i] = orig[perm[i]];
                }
                break;
            }
            case AnomalyType::ReverseMotion: {
                // The span plays backwards, translated to stay continuous at
                // the entry; afterwards the original motion replays from the
                // entry pose, so the exit is smooth as well.
                std::vector<std::vector<Keypoint>> orig;
                for (long t = b; t < n; ++t) orig.push_back(track.frames[t].keypoints);
                const long len = e - b;
                const double sx = orig[0][0].x - orig[len - 1][0].x;
                const double sy = orig[0][0].y - orig[len - 1][0].y;
                for (long t = b; t < e; ++t)
                    track.frames[t].keypoints = translated(orig[e - 1 - t], sx, sy);
                for (long t = e; t < n; ++t)
                    track.frames[t].keypoints = translated(orig[t - e + 1], sx, sy);
                break;
            }
        }
        clamp_track(track);
    }

    LabeledFrames labels;
    for (const auto& f : track.frames)
        labels.set(track.video_id, f.frame_index, f.frame_index >= b && f.frame_index < e ? 1 : 0);
    return labels;
}

Benchmark make_benchmark(const BenchmarkSpec& spec) {
    SynthScenario train_sc;
    train_sc.seed = Rng::mix(spec.seed, 0x7717ull);
    train_sc.n_videos = spec.train_videos;
    train_sc.n_persons = spec.persons_per_video;
    train_sc.n_frames = spec.n_frames;
    train_sc.k = spec.k;
    train_sc.video_prefix = "train";

    SynthScenario test_sc = train_sc;
    test_sc.seed = Rng::mix(spec.seed, 0x7e57ull);
    test_sc.n_videos = spec.test_videos;
    test_sc.video_prefix = "test";

    Benchmark bench;
    bench.train_tracks = gen_normal_tracks(train_sc);
    bench.test_tracks = gen_normal_tracks(test_sc);

    for (const auto& t : bench.train_tracks)
        for (const auto& f : t.frames) bench.train_labels.set(t.video_id, f.frame_index, 0);
    for (const auto& t : bench.test_tracks)
        for (const auto& f : t.frames) bench.test_labels.set(t.video_id, f.frame_index, 0);

    // Phase one: choose spans. Non-overlapping per track with a clear gap,
    // anomaly types in rotation, until the anomalous frame fraction reaches
    // the target band.
    Rng rng(Rng::mix(spec.seed, 0xa40ull));
    const long total_frames = static_cast<long>(spec.test_videos) * spec.n_frames;
    const long target_lo = static_cast<long>(spec.anomaly_fraction_lo * total_frames) + 1;
    std::vector<std::vector<AnomalySpec>> per_track(bench.test_tracks.size());
    long labeled = 0;
    int type_cursor = 0;
    for (int attempt = 0; attempt < 10000 && labeled < target_lo; ++attempt) {
        const int track = static_cast<int>(rng.below(bench.test_tracks.size()));
        // Rotation favors the kinematically loud anomaly classes, the way
        // real surveillance anomalies skew toward dramatic motion.
        static constexpr AnomalyType kRotation[6] = {
            AnomalyType::VelocitySpike, AnomalyType::JointScramble, AnomalyType::Freeze,
            AnomalyType::VelocitySpike, AnomalyType::JointScramble, AnomalyType::ReverseMotion};
        const AnomalyType type = kRotation[type_cursor % 6];
        // Freeze and reverse are transition anomalies: keep their spans
        // about one window long so every labeled frame is near the change.
        const bool transition =
            type == AnomalyType::Freeze || type == AnomalyType::ReverseMotion;
        long len = transition ? 24 + static_cast<long>(rng.below(7))
                              : 26 + static_cast<long>(rng.below(15));
        // Truncate so the total never overshoots the top of the band (small
        // benchmarks would otherwise jump straight past it).
        const long target_hi = static_cast<long>(spec.anomaly_fraction_hi * total_frames);
        len = std::min(len, std::max<long>(6, target_hi - labeled));
        if (spec.n_frames < 80 + len) continue;
        const long begin = 40 + static_cast<long>(rng.below(spec.n_frames - 80 - len + 1));
        const long end = begin + len;
        bool clear = true;
        for (const auto& s : per_track[track])
            if (begin < s.end + 48 && s.begin < end + 48) {
                clear = false;
                break;
            }
        if (!clear) continue;

        AnomalySpec a;
        a.type = type;
        ++type_cursor;
        a.track_index = track;
        a.begin = begin;
        a.end = end;
        per_track[track].push_back(a);

        const std::string& video = bench.test_tracks[track].video_id;
        for (long f = begin; f < end; ++f) {
            auto& lab = bench.test_labels.labels[{video, f}];
            if (lab == 0) {
                lab = 1;
                ++labeled;
            }
        }
    }
    const double fraction = static_cast<double>(labeled) / total_frames;
    if (fraction < spec.anomaly_fraction_lo || fraction > spec.anomaly_fraction_hi)
        throw std::runtime_error("make_benchmark: anomalous frame fraction out of band");

    // Phase two: inject in time order per track (the freeze/reverse
    // transforms rewrite the tail of the track, so later spans must not be
    // in place yet).
    for (std::size_t ti = 0; ti < per_track.size(); ++ti) {
        auto& specs = per_track[ti];
        std::sort(specs.begin(), specs.end(),
                  [](const AnomalySpec& a, const AnomalySpec& b) { return a.begin < b.begin; });
        for (std::size_t i = 0; i < specs.size(); ++i) {
            inject_anomaly(bench.test_tracks[ti], specs[i],
                           Rng::mix(spec.seed, 0x1417ull + i, static_cast<std::uint64_t>(ti)));
            bench.injected.push_back(specs[i]);
        }
    }
    return bench;
}

Benchmark make_benchmark(std::uint64_t seed) {
    BenchmarkSpec spec;
    spec.seed = seed;
    return make_benchmark(spec);
}

}  // namespace posewatch::synth
