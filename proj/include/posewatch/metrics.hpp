#pragma once

#include <map>
#include <string>
#include <vector>

#include "posewatch/scoring.hpp"

namespace posewatch {

// Frame-level ground truth: 0 = normal, 1 = anomalous.
struct LabeledFrames {
    std::map<std::pair<std::string, long>, int> labels;

    void set(const std::string& video, long frame, int label) { labels[{video, frame}] = label; }
};

LabeledFrames read_labels(const std::string& path);
void write_labels(const std::string& path, const LabeledFrames& labels);

struct RocPoint {
    double fpr = 0.0;
    double tpr = 0.0;
    double threshold = 0.0;
};

struct EvalReport {
    double auc_roc = 0.0;
    double eer = 0.0;
    double eer_threshold = 0.0;
    std::vector<RocPoint> roc_points;
    long n_pos = 0;
    long n_neg = 0;
    bool proper = true;  // EER landed in [0, 0.5]
    std::string config_fingerprint;
};

// Threshold-sweep ROC with equal scores grouped into one step and
// trapezoidal integration; equals the pairwise Mann-Whitney statistic with
// half credit for ties. Higher score = more anomalous. Throws when a class
// is missing.
double auc_roc(const std::vector<double>& scores, const std::vector<int>& labels);

// The operating point where FPR = FNR, linearly interpolated between
// adjacent thresholds when the curves cross between them. Returns
// (eer, threshold).
std::pair<double, double> eer(const std::vector<double>& scores, const std::vector<int>& labels);

std::vector<RocPoint> roc_points(const std::vector<double>& scores, const std::vector<int>& labels);

// Joins frame scores with labels (every scored frame must be labeled) and
// bundles both metrics plus the ROC table. Deterministic.
EvalReport evaluate(const FrameScoreSeries& scores, const LabeledFrames& labels,
                    const std::string& config_fingerprint);

// Structured text report; parse(format(r)) == r including all doubles.
std::string format_report(const EvalReport& report);
EvalReport parse_report(const std::string& text);
void write_report(const std::string& path, const EvalReport& report);
EvalReport read_report(const std::string& path);

// fpr,tpr,threshold table for external plotting.
void write_roc_table(const std::string& path, const EvalReport& report);

}  // namespace posewatch
