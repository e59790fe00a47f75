#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "posewatch/metrics.hpp"
#include "posewatch/pose_types.hpp"

namespace posewatch::synth {

enum class AnomalyType { VelocitySpike, Freeze, JointScramble, ReverseMotion };

std::string anomaly_name(AnomalyType t);

struct AnomalySpec {
    AnomalyType type = AnomalyType::VelocitySpike;
    int track_index = 0;
    long begin = 0;  // span [begin, end)
    long end = 0;
};

// Deterministic walker generator: stylized k-joint skeletons with sinusoidal
// limb oscillation, walking a circular path at constant speed so clips of
// any length stay inside [0, 1].
struct SynthScenario {
    std::uint64_t seed = 7;
    int n_videos = 20;
    int n_persons = 2;  // tracks per video
    int n_frames = 600;
    int k = 17;
    std::string video_prefix = "v";

    // gait parameter ranges, sampled per person
    double stride_freq_lo = 0.065, stride_freq_hi = 0.075;  // cycles per frame
    double amplitude_lo = 0.028, amplitude_hi = 0.032;      // limb swing, coordinate units
    double drift_lo = 0.0040, drift_hi = 0.0050;            // per-frame walking speed

    std::vector<AnomalySpec> anomalies;

    int n_tracks() const { return n_videos * n_persons; }

    // Per-coordinate per-frame displacement never exceeds this on normal
    // tracks (drift plus the oscillation derivative bound).
    double velocity_bound() const {
        return drift_hi + amplitude_hi * 2.0 * 3.14159265358979323846 * stride_freq_hi + 1e-12;
    }
};

std::vector<PoseTrack> gen_normal_tracks(const SynthScenario& scenario);

// Applies one anomaly transform in place over its span and returns the
// track's frame labels (1 inside the span, 0 elsewhere):
//   velocity_spike  - violent alternating displacement, several times the
//                     track's normal per-frame step
//   freeze          - repeats the entry pose; motion resumes smoothly after
//   joint_scramble  - random keypoint identity permutation every frame
//   reverse_motion  - the span plays backwards, continuous at both ends
// Coordinates are re-clamped to [0, 1] afterwards.
LabeledFrames inject_anomaly(PoseTrack& track, const AnomalySpec& anomaly, std::uint64_t seed);

struct Benchmark {
    std::vector<PoseTrack> train_tracks;
    std::vector<PoseTrack> test_tracks;
    LabeledFrames train_labels;  // all zero by construction
    LabeledFrames test_labels;
    std::vector<AnomalySpec> injected;
};

struct BenchmarkSpec {
    std::uint64_t seed = 7;
    int train_videos = 20;
    int test_videos = 10;
    int persons_per_video = 2;  // 40 train / 20 test tracks with the defaults
    int n_frames = 600;
    int k = 17;
    double anomaly_fraction_lo = 0.09;
    double anomaly_fraction_hi = 0.14;
};

// Train split: normal-only tracks. Test split: anomalies injected until the
// anomalous frame fraction lands in the target band. Fully reproducible from
// the seed.
Benchmark make_benchmark(const BenchmarkSpec& spec);
Benchmark make_benchmark(std::uint64_t seed);

}  // namespace posewatch::synth
