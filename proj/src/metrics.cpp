#include "posewatch/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "posewatch/io_util.hpp"

namespace posewatch {

LabeledFrames read_labels(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open label file: " + path);
    LabeledFrames out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::stringstream ss(line);
        std::string video, frame, label;
        if (!std::getline(ss, video, ',') || !std::getline(ss, frame, ',') ||
            !std::getline(ss, label, ','))
            throw std::runtime_error(path + ": bad label record: " + line);
        const int lab = std::stoi(label);
        if (lab != 0 && lab != 1) throw std::runtime_error(path + ": label must be 0 or 1: " + line);
        out.set(video, std::stol(frame), lab);
    }
    return out;
}

void write_labels(const std::string& path, const LabeledFrames& labels) {
    std::string body = "# labels v1\n# video_id,frame_index,label\n";
    char buf[48];
    for (const auto& [key, label] : labels.labels) {
        std::snprintf(buf, sizeof(buf), ",%ld,%d\n", key.second, label);
        body += key.first;
        body += buf;
    }
    write_file_atomic(path, body);
}

namespace {

struct SweepPoint {
    long fp = 0, tp = 0;
    double threshold = 0.0;
};

// Points of the threshold sweep, equal scores grouped; the leading point
// classifies everything negative (sentinel threshold above the max score).
std::vector<SweepPoint> sweep(const std::vector<double>& scores, const std::vector<int>& labels,
                              long& n_pos, long& n_neg) {
    if (scores.size() != labels.size())
        throw std::invalid_argument("metrics: scores/labels size mismatch");
    n_pos = std::count(labels.begin(), labels.end(), 1);
    n_neg = static_cast<long>(labels.size()) - n_pos;
    if (n_pos == 0 || n_neg == 0)
        throw std::invalid_argument("metrics: need at least one frame of each class");

    std::vector<int> idx(scores.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](int a, int b) { return scores[a] > scores[b]; });

    std::vector<SweepPoint> pts;
    pts.push_back({0, 0, scores[idx[0]] + 1.0});
    long tp = 0, fp = 0;
    std::size_t i = 0;
    while (i < idx.size()) {
        const double s = scores[idx[i]];
        while (i < idx.size() && scores[idx[i]] == s) {
            if (labels[idx[i]] == 1) ++tp;
            else ++fp;
            ++i;
        }
        pts.push_back({fp, tp, s});
    }
    return pts;
}

}  // namespace

double auc_roc(const std::vector<double>& scores, const std::vector<int>& labels) {
    long n_pos = 0, n_neg = 0;
    const auto pts = sweep(scores, labels, n_pos, n_neg);
    // Integer trapezoid accumulation; the single division keeps it exact.
    long double area2 = 0.0L;
    for (std::size_t i = 1; i < pts.size(); ++i)
        area2 += static_cast<long double>(pts[i].fp - pts[i - 1].fp) *
                 static_cast<long double>(pts[i].tp + pts[i - 1].tp);
    return static_cast<double>(area2 / (2.0L * n_pos * n_neg));
}

std::vector<RocPoint> roc_points(const std::vector<double>& scores, const std::vector<int>& labels) {
    long n_pos = 0, n_neg = 0;
    const auto pts = sweep(scores, labels, n_pos, n_neg);
    std::vector<RocPoint> out;
    out.reserve(pts.size());
    for (const auto& p : pts)
        out.push_back({static_cast<double>(p.fp) / n_neg, static_cast<double>(p.tp) / n_pos,
                       p.threshold});
    return out;
}

std::pair<double, double> eer(const std::vector<double>& scores, const std::vector<int>& labels) {
    long n_pos = 0, n_neg = 0;
    const auto pts = sweep(scores, labels, n_pos, n_neg);

    double prev_fpr = 0.0, prev_fnr = 1.0, prev_thr = pts[0].threshold;
    double prev_diff = prev_fpr - prev_fnr;  // starts at -1
    for (std::size_t i = 1; i < pts.size(); ++i) {
        const double fpr = static_cast<double>(pts[i].fp) / n_neg;
        const double fnr = 1.0 - static_cast<double>(pts[i].tp) / n_pos;
        const double diff = fpr - fnr;
        if (diff == 0.0) return {0.5 * (fpr + fnr), pts[i].threshold};
        if (diff > 0.0) {
            // FPR and FNR cross between the previous threshold and this one.
            const double lambda = -prev_diff / (diff - prev_diff);
            const double fpr_x = prev_fpr + lambda * (fpr - prev_fpr);
            const double fnr_x = prev_fnr + lambda * (fnr - prev_fnr);
            return {0.5 * (fpr_x + fnr_x), prev_thr + lambda * (pts[i].threshold - prev_thr)};
        }
        prev_fpr = fpr;
        prev_fnr = fnr;
        prev_diff = diff;
        prev_thr = pts[i].threshold;
    }
    // FPR never reached FNR; the final point (1, 0) makes this unreachable
    // for non-degenerate sweeps, but keep a sane fallback.
    return {0.5 * (prev_fpr + prev_fnr), prev_thr};
}

EvalReport evaluate(const FrameScoreSeries& scores, const LabeledFrames& labels,
                    const std::string& config_fingerprint) {
    std::vector<double> s;
    std::vector<int> y;
    s.reserve(scores.entries.size());
    y.reserve(scores.entries.size());
    for (const auto& e : scores.entries) {
        const auto it = labels.labels.find({e.video_id, e.frame_index});
        if (it == labels.labels.end())
            throw std::runtime_error("evaluate: no label for " + e.video_id + " frame " +
                                     std::to_string(e.frame_index));
        s.push_back(e.score);
        y.push_back(it->second);
    }

    EvalReport r;
    r.config_fingerprint = config_fingerprint;
    r.auc_roc = auc_roc(s, y);
    const auto [e, thr] = eer(s, y);
    r.eer = e;
    r.eer_threshold = thr;
    r.roc_points = roc_points(s, y);
    r.n_pos = std::count(y.begin(), y.end(), 1);
    r.n_neg = static_cast<long>(y.size()) - r.n_pos;
    r.proper = r.eer <= 0.5;
    return r;
}

std::string format_report(const EvalReport& r) {
    std::string out = "# posewatch-eval v1\n";
    char buf[128];
    std::snprintf(buf, sizeof(buf), "auc_roc: %.17g\n", r.auc_roc);
    out += buf;
    std::snprintf(buf, sizeof(buf), "eer: %.17g\n", r.eer);
    out += buf;
    std::snprintf(buf, sizeof(buf), "eer_threshold: %.17g\n", r.eer_threshold);
    out += buf;
    std::snprintf(buf, sizeof(buf), "n_pos: %ld\nn_neg: %ld\nproper: %d\n", r.n_pos, r.n_neg,
                  r.proper ? 1 : 0);
    out += buf;
    out += "config_fingerprint: " + r.config_fingerprint + "\n";
    std::snprintf(buf, sizeof(buf), "roc_points: %zu\n", r.roc_points.size());
    out += buf;
    for (const auto& p : r.roc_points) {
        std::snprintf(buf, sizeof(buf), "%.17g %.17g %.17g\n", p.fpr, p.tpr, p.threshold);
        out += buf;
    }
    return out;
}

EvalReport parse_report(const std::string& text) {
    EvalReport r;
    std::istringstream in(text);
    std::string line;
    std::size_t n_points = 0;
    bool in_points = false;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (in_points) {
            std::istringstream ss(line);
            RocPoint p;
            if (!(ss >> p.fpr >> p.tpr >> p.threshold))
                throw std::runtime_error("bad roc point line: " + line);
            r.roc_points.push_back(p);
            continue;
        }
        const auto colon = line.find(": ");
        if (colon == std::string::npos) throw std::runtime_error("bad report line: " + line);
        const std::string key = line.substr(0, colon);
        const std::string val = line.substr(colon + 2);
        if (key == "auc_roc") r.auc_roc = std::stod(val);
        else if (key == "eer") r.eer = std::stod(val);
        else if (key == "eer_threshold") r.eer_threshold = std::stod(val);
        else if (key == "n_pos") r.n_pos = std::stol(val);
        else if (key == "n_neg") r.n_neg = std::stol(val);
        else if (key == "proper") r.proper = val == "1";
        else if (key == "config_fingerprint") r.config_fingerprint = val;
        else if (key == "roc_points") {
            n_points = std::stoul(val);
            in_points = true;
        } else throw std::runtime_error("unknown report key: " + key);
    }
    if (r.roc_points.size() != n_points)
        throw std::runtime_error("report roc point count mismatch");
    return r;
}

void write_report(const std::string& path, const EvalReport& report) {
    write_file_atomic(path, format_report(report));
}

EvalReport read_report(const std::string& path) { return parse_report(read_file(path)); }

void write_roc_table(const std::string& path, const EvalReport& report) {
    std::string body = "# fpr,tpr,threshold\n";
    char buf[96];
    for (const auto& p : report.roc_points) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g\n", p.fpr, p.tpr, p.threshold);
        body += buf;
    }
    write_file_atomic(path, body);
}

}  // namespace posewatch
