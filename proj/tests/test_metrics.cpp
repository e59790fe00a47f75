#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "posewatch/metrics.hpp"
#include "test_util.hpp"

using namespace posewatch;

namespace {

// Random score/label instance with a planted signal and plenty of ties.
void random_instance(Rng& rng, int max_n, std::vector<double>& scores, std::vector<int>& labels) {
    const int n = 2 + static_cast<int>(rng.below(max_n - 1));
    scores.clear();
    labels.clear();
    bool has_pos = false, has_neg = false;
    for (int i = 0; i < n; ++i) {
        const int label = rng.uniform() < 0.3 ? 1 : 0;
        double s = rng.uniform() + (label ? 0.2 * rng.uniform() : 0.0);
        if (rng.uniform() < 0.25) s = std::round(s * 8.0) / 8.0;  // force ties
        scores.push_back(s);
        labels.push_back(label);
        (label ? has_pos : has_neg) = true;
    }
    if (!has_pos) labels[0] = 1;
    if (!has_neg) labels[labels.size() - 1] = 0;
}

}  // namespace

TEST_CASE("auc: perfect separation, pure ties, and the four-point fixture") {
    CHECK(auc_roc({0.9, 0.8, 0.2, 0.1}, {1, 1, 0, 0}) == 1.0);
    CHECK(auc_roc({0.5, 0.5, 0.5, 0.5}, {1, 0, 1, 0}) == 0.5);
    CHECK(auc_roc({0.1, 0.4, 0.35, 0.8}, {0, 0, 1, 1}) == 0.75);
    CHECK(auc_roc({0.1, 0.4, 0.35, 0.8}, {0, 0, 1, 1}) ==
          doctest::Approx(testutil::auc_pairwise_oracle({0.1, 0.4, 0.35, 0.8}, {0, 0, 1, 1}))
              .epsilon(1e-15));
}

TEST_CASE("auc requires both classes") {
    CHECK_THROWS_AS(auc_roc({0.1, 0.2}, {1, 1}), std::invalid_argument);
    CHECK_THROWS_AS(auc_roc({0.1, 0.2}, {0, 0}), std::invalid_argument);
}

TEST_CASE("auc equals the pairwise Mann-Whitney oracle on random instances") {
    Rng rng(404);
    std::vector<double> scores;
    std::vector<int> labels;
    for (int trial = 0; trial < 500; ++trial) {
        random_instance(rng, 200, scores, labels);
        const double a = auc_roc(scores, labels);
        const double o = testutil::auc_pairwise_oracle(scores, labels);
        CHECK(std::abs(a - o) <= 1e-12);
    }
}

TEST_CASE("auc is invariant under strictly increasing transforms") {
    Rng rng(405);
    std::vector<double> scores;
    std::vector<int> labels;
    for (int trial = 0; trial < 50; ++trial) {
        random_instance(rng, 100, scores, labels);
        std::vector<double> mapped;
        for (const double s : scores) mapped.push_back(std::exp(s) + 3.0 * s);
        CHECK(auc_roc(scores, labels) == auc_roc(mapped, labels));
    }
}

TEST_CASE("flipping all labels maps auc to 1 - auc") {
    Rng rng(406);
    std::vector<double> scores;
    std::vector<int> labels;
    for (int trial = 0; trial < 50; ++trial) {
        random_instance(rng, 100, scores, labels);
        std::vector<int> flipped;
        for (const int l : labels) flipped.push_back(1 - l);
        CHECK(auc_roc(scores, labels) == doctest::Approx(1.0 - auc_roc(scores, flipped)).epsilon(1e-12));
    }
}

TEST_CASE("eer: perfect separation and constant scores") {
    const auto [perfect, thr] = eer({0.9, 0.8, 0.2, 0.1}, {1, 1, 0, 0});
    CHECK(perfect == 0.0);
    CHECK(thr <= 0.8);
    CHECK(thr >= 0.2);

    const auto [chance, thr2] = eer({0.5, 0.5, 0.5, 0.5}, {1, 0, 1, 0});
    CHECK(chance == 0.5);
    (void)thr2;
}

TEST_CASE("eer of the four-point fixture matches the exhaustive sweep oracle") {
    const std::vector<double> s{0.1, 0.4, 0.35, 0.8};
    const std::vector<int> y{0, 0, 1, 1};
    const auto [e, thr] = eer(s, y);
    CHECK(e == doctest::Approx(testutil::eer_sweep_oracle(s, y)).epsilon(1e-12));
    (void)thr;
}

TEST_CASE("eer matches the exhaustive threshold-sweep oracle on random instances") {
    Rng rng(407);
    std::vector<double> scores;
    std::vector<int> labels;
    for (int trial = 0; trial < 500; ++trial) {
        random_instance(rng, 200, scores, labels);
        const auto [e, thr] = eer(scores, labels);
        (void)thr;
        CHECK(std::abs(e - testutil::eer_sweep_oracle(scores, labels)) <= 1e-9);
        CHECK(e >= 0.0);
        CHECK(e <= 1.0);
    }
}

TEST_CASE("roc points are monotone in both coordinates") {
    Rng rng(408);
    std::vector<double> scores;
    std::vector<int> labels;
    for (int trial = 0; trial < 50; ++trial) {
        random_instance(rng, 150, scores, labels);
        const auto pts = roc_points(scores, labels);
        REQUIRE(pts.size() >= 2);
        CHECK(pts.front().fpr == 0.0);
        CHECK(pts.front().tpr == 0.0);
        CHECK(pts.back().fpr == 1.0);
        CHECK(pts.back().tpr == 1.0);
        for (std::size_t i = 1; i < pts.size(); ++i) {
            CHECK(pts[i].fpr >= pts[i - 1].fpr);
            CHECK(pts[i].tpr >= pts[i - 1].tpr);
            CHECK(pts[i].threshold < pts[i - 1].threshold);
        }
    }
}

TEST_CASE("evaluate joins scores with labels and the report round-trips") {
    FrameScoreSeries scores;
    LabeledFrames labels;
    Rng rng(409);
    for (long f = 0; f < 60; ++f) {
        const int label = f % 5 == 0 ? 1 : 0;
        scores.entries.push_back({"vid", f, rng.uniform() + (label ? 0.4 : 0.0)});
        labels.set("vid", f, label);
    }
    const EvalReport r = evaluate(scores, labels, "fingerprint123");
    CHECK(r.auc_roc ==
          [&] {
              std::vector<double> s;
              std::vector<int> y;
              for (const auto& e : scores.entries) {
                  s.push_back(e.score);
                  y.push_back(labels.labels.at({e.video_id, e.frame_index}));
              }
              return auc_roc(s, y);
          }());
    CHECK(r.n_pos == 12);
    CHECK(r.n_neg == 48);
    CHECK(r.proper == (r.eer <= 0.5));
    CHECK(r.config_fingerprint == "fingerprint123");

    const EvalReport back = parse_report(format_report(r));
    CHECK(back.auc_roc == r.auc_roc);
    CHECK(back.eer == r.eer);
    CHECK(back.eer_threshold == r.eer_threshold);
    CHECK(back.n_pos == r.n_pos);
    CHECK(back.n_neg == r.n_neg);
    CHECK(back.proper == r.proper);
    CHECK(back.config_fingerprint == r.config_fingerprint);
    REQUIRE(back.roc_points.size() == r.roc_points.size());
    for (std::size_t i = 0; i < r.roc_points.size(); ++i) {
        CHECK(back.roc_points[i].fpr == r.roc_points[i].fpr);
        CHECK(back.roc_points[i].tpr == r.roc_points[i].tpr);
        CHECK(back.roc_points[i].threshold == r.roc_points[i].threshold);
    }

    SUBCASE("missing label is an error") {
        scores.entries.push_back({"other_video", 0, 0.5});
        CHECK_THROWS_WITH_AS(evaluate(scores, labels, ""), doctest::Contains("no label"),
                             std::runtime_error);
    }
}

TEST_CASE("label files round-trip") {
    const std::string dir = testutil::temp_dir("labels");
    LabeledFrames labels;
    labels.set("a", 0, 0);
    labels.set("a", 1, 1);
    labels.set("b", 7, 1);
    write_labels(dir + "/l.csv", labels);
    const LabeledFrames r = read_labels(dir + "/l.csv");
    CHECK(r.labels == labels.labels);
    CHECK_THROWS(read_labels(dir + "/missing.csv"));
}
