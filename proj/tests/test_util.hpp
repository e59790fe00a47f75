// Shared test-side oracles. Everything here is an independent route to the
// same answers as the library: brute-force re-indexing for the tokenizers,
// pairwise statistics for the metrics, finite differences for the gradients.
#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "posewatch/pose_io.hpp"
#include "posewatch/rng.hpp"
#include "posewatch/tokenizer.hpp"
#include "posewatch/uetd/model.hpp"

namespace testutil {

using posewatch::Matrix;
using posewatch::PoseWindow;
using posewatch::Rng;
using posewatch::Scheme;
using posewatch::TokenizationScheme;

inline PoseWindow random_window(int beta, int k, Rng& rng, double lo = 0.0, double hi = 1.0) {
    PoseWindow w;
    w.video_id = "t";
    w.person_id = 0;
    w.start_frame = 0;
    w.beta = beta;
    w.k = k;
    w.absolute.reshape(beta, 2 * k);
    for (auto& v : w.absolute.data) v = rng.uniform(lo, hi);
    w.relative = posewatch::relative_pose(w.absolute);
    return w;
}

struct Slot {
    int token;
    int offset;
};

// Independent statement of each scheme's layout: where scalar
// (part, frame, keypoint, axis) lands. part 0 = absolute, 1 = relative;
// axis 0 = x, 1 = y. nullopt = dropped (relative channels, use_relative off).
inline std::optional<Slot> slot_oracle(const TokenizationScheme& ts, int beta, int k, int part,
                                       int frame, int kp, int axis) {
    if (part == 1 && !ts.use_relative) return std::nullopt;
    switch (ts.scheme) {
        case Scheme::StPrp: {
            const int token = (axis == 0 ? 0 : beta / 2) + frame / 2;
            int offset = (frame % 2 == 0 ? 0 : k) + kp;
            if (part == 1) offset += 2 * k;
            return Slot{token, offset};
        }
        case Scheme::TPrp: {
            int offset = (axis == 0 ? 0 : k) + kp;
            if (part == 1) offset += 2 * k;
            return Slot{frame, offset};
        }
        case Scheme::KsPrp: {
            int offset = (axis == 0 ? 0 : beta) + frame;
            if (part == 1) offset += 2 * beta;
            return Slot{kp, offset};
        }
        case Scheme::FsPrp: {
            const int token = (axis == 0 ? kp : k + kp);
            int offset = frame;
            if (part == 1) offset += beta;
            return Slot{token, offset};
        }
    }
    return std::nullopt;
}

inline double window_value(const PoseWindow& w, int part, int frame, int kp, int axis) {
    const Matrix& block = part == 0 ? w.absolute : w.relative;
    return block(frame, (axis == 0 ? 0 : w.k) + kp);
}

// AUC as the exhaustive pairwise Mann-Whitney statistic.
inline double auc_pairwise_oracle(const std::vector<double>& scores, const std::vector<int>& labels) {
    double wins = 0.0;
    long n_pos = 0, n_neg = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (labels[i] != 1) continue;
        ++n_pos;
        for (std::size_t j = 0; j < scores.size(); ++j) {
            if (labels[j] == 1) continue;
            if (scores[i] > scores[j]) wins += 1.0;
            else if (scores[i] == scores[j]) wins += 0.5;
        }
    }
    for (const int l : labels)
        if (l != 1) ++n_neg;
    return wins / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

// EER by brute-force counting at every distinct threshold, then the same
// linear interpolation rule at the crossing.
inline double eer_sweep_oracle(const std::vector<double>& scores, const std::vector<int>& labels) {
    std::vector<double> thr = scores;
    std::sort(thr.begin(), thr.end(), std::greater<>());
    thr.erase(std::unique(thr.begin(), thr.end()), thr.end());
    thr.insert(thr.begin(), thr.front() + 1.0);  // classify-nothing sentinel

    long n_pos = 0, n_neg = 0;
    for (const int l : labels) (l == 1 ? n_pos : n_neg)++;

    auto rates = [&](double t) {
        long fp = 0, fn = 0;
        for (std::size_t i = 0; i < scores.size(); ++i) {
            const bool predicted = scores[i] >= t;
            if (predicted && labels[i] == 0) ++fp;
            if (!predicted && labels[i] == 1) ++fn;
        }
        return std::pair<double, double>(static_cast<double>(fp) / n_neg,
                                         static_cast<double>(fn) / n_pos);
    };

    auto [prev_fpr, prev_fnr] = rates(thr[0]);
    for (std::size_t i = 1; i < thr.size(); ++i) {
        const auto [fpr, fnr] = rates(thr[i]);
        const double diff = fpr - fnr;
        if (diff == 0.0) return 0.5 * (fpr + fnr);
        if (diff > 0.0) {
            const double prev_diff = prev_fpr - prev_fnr;
            const double lambda = -prev_diff / (diff - prev_diff);
            return 0.5 * (prev_fpr + lambda * (fpr - prev_fpr) + prev_fnr + lambda * (fnr - prev_fnr));
        }
        prev_fpr = fpr;
        prev_fnr = fnr;
    }
    return 0.5 * (prev_fpr + prev_fnr);
}

struct GradCheckStats {
    int checked = 0;
    int failures = 0;
    double worst_abs = 0.0;
    std::string worst_param;
};

// Central finite differences against the analytic gradient, every scalar of
// every parameter block. loss(grads*) must be deterministic.
template <typename LossFn>
GradCheckStats grad_check(posewatch::uetd::UetdWeights& w, LossFn&& loss, double rtol = 1e-3,
                          double atol = 1e-6, double h = 1e-5) {
    posewatch::uetd::UetdWeights grads = posewatch::uetd::zeros_like(w);
    loss(&grads);

    std::vector<Matrix*> params, gmats;
    std::vector<std::string> names;
    w.visit([&](const std::string& n, Matrix& m) {
        params.push_back(&m);
        names.push_back(n);
    });
    grads.visit([&](const std::string&, Matrix& m) { gmats.push_back(&m); });

    GradCheckStats stats;
    for (std::size_t p = 0; p < params.size(); ++p) {
        for (std::size_t j = 0; j < params[p]->size(); ++j) {
            double& theta = params[p]->data[j];
            const double saved = theta;
            theta = saved + h;
            const double up = loss(nullptr);
            theta = saved - h;
            const double down = loss(nullptr);
            theta = saved;
            const double fd = (up - down) / (2.0 * h);
            const double analytic = gmats[p]->data[j];
            const double err = std::abs(analytic - fd);
            ++stats.checked;
            if (err > atol + rtol * std::abs(fd)) {
                ++stats.failures;
                if (err > stats.worst_abs) {
                    stats.worst_abs = err;
                    stats.worst_param = names[p] + "[" + std::to_string(j) + "]";
                }
            }
        }
    }
    return stats;
}

inline std::string temp_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / ("posewatch_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir.string();
}

}  // namespace testutil
