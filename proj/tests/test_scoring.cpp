#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>

#include "posewatch/scoring.hpp"
#include "posewatch/pose_io.hpp"
#include "posewatch/synth.hpp"
#include "test_util.hpp"

using namespace posewatch;

namespace {

ScoreSeries series_of(std::vector<double> scores, ScoreKind kind = ScoreKind::Cs) {
    ScoreSeries s;
    s.kind = kind;
    long f = 0;
    for (const double v : scores) s.entries.push_back({"v", 0, f++, v});
    return s;
}

struct Fixture {
    uetd::UetdWeights weights;
    std::vector<PoseWindow> windows;
    TokenizationScheme scheme{Scheme::StPrp, true};

    Fixture() : weights(uetd::init_model(config(), 21)) {
        synth::SynthScenario sc;
        sc.seed = 55;
        sc.n_videos = 1;
        sc.n_persons = 1;
        sc.n_frames = 60;
        sc.k = 2;
        for (const auto& t : synth::gen_normal_tracks(sc))
            for (auto& w : extract_windows(t, 8, 1)) windows.push_back(std::move(w));
    }

    static uetd::UetdConfig config() {
        uetd::UetdConfig c;
        c.n_heads = 2;
        c.n_layers = 1;
        c.ff_dim = 8;
        c.model_dim = 8;
        c.token_dim = 8;  // st-prp, beta 8, k 2 -> 8 tokens x 8
        c.n_tokens = 8;
        c.dropout = 0.0;
        return c;
    }
};

}  // namespace

TEST_CASE("min_max_normalize fixtures and laws") {
    const ScoreSeries s = min_max_normalize(series_of({2.0, 4.0, 6.0}));
    CHECK(s.entries[0].score == 0.0);
    CHECK(s.entries[1].score == 0.5);
    CHECK(s.entries[2].score == 1.0);

    const ScoreSeries constant = min_max_normalize(series_of({3.3, 3.3, 3.3}));
    for (const auto& e : constant.entries) CHECK(e.score == 0.0);

    Rng rng(2);
    std::vector<double> raw;
    for (int i = 0; i < 100; ++i) raw.push_back(rng.uniform(-5.0, 5.0));
    const ScoreSeries n = min_max_normalize(series_of(raw));
    for (const auto& e : n.entries) {
        CHECK(e.score >= 0.0);
        CHECK(e.score <= 1.0);
    }

    CHECK_THROWS_AS(min_max_normalize(ScoreSeries{}), std::invalid_argument);
}

TEST_CASE("min_max_normalize preserves ordering under strictly increasing transforms") {
    Rng rng(3);
    std::vector<double> raw;
    for (int i = 0; i < 64; ++i) raw.push_back(rng.uniform(-2.0, 2.0));
    std::vector<double> mapped;
    for (const double v : raw) mapped.push_back(std::exp(0.7 * v) + std::atan(v));

    const ScoreSeries a = min_max_normalize(series_of(raw));
    const ScoreSeries b = min_max_normalize(series_of(mapped));
    for (std::size_t i = 0; i < raw.size(); ++i)
        for (std::size_t j = 0; j < raw.size(); ++j) {
            const bool lt_a = a.entries[i].score < a.entries[j].score;
            const bool lt_b = b.entries[i].score < b.entries[j].score;
            CHECK(lt_a == lt_b);
        }
}

TEST_CASE("hybrid_score: equal weights, symmetry, fallback") {
    ScoreSeries cs = series_of({0.2, 0.4, 0.9}, ScoreKind::Cs);
    ScoreSeries fs = series_of({0.8, 0.4, 0.1}, ScoreKind::Fs);

    const ScoreSeries hs = hybrid_score(cs, fs);
    REQUIRE(hs.entries.size() == 3);
    CHECK(hs.kind == ScoreKind::Hs);
    CHECK(hs.entries[0].score == 0.5);  // 0.5*0.2 + 0.5*0.8
    CHECK(hs.entries[1].score == 0.4);  // convex combination fixed point
    CHECK(hs.entries[2].score == 0.5);

    const ScoreSeries swapped = hybrid_score(fs, cs);
    for (std::size_t i = 0; i < 3; ++i) CHECK(swapped.entries[i].score == hs.entries[i].score);

    SUBCASE("entries in only one series fall back to that series") {
        fs.entries.pop_back();  // frame 2 becomes cs-only
        const ScoreSeries partial = hybrid_score(cs, fs);
        REQUIRE(partial.entries.size() == 3);
        CHECK(partial.entries[2].score == 0.9);
    }
    SUBCASE("values stay in [0, 1] when inputs do") {
        Rng rng(4);
        ScoreSeries a, b;
        a.kind = ScoreKind::Cs;
        b.kind = ScoreKind::Fs;
        for (long f = 0; f < 50; ++f) {
            a.entries.push_back({"v", 0, f, rng.uniform()});
            b.entries.push_back({"v", 0, f, rng.uniform()});
        }
        for (const auto& e : hybrid_score(a, b).entries) {
            CHECK(e.score >= 0.0);
            CHECK(e.score <= 1.0);
        }
    }
}

TEST_CASE("frame_aggregate: max over persons, fill policies, group-by oracle") {
    ScoreSeries s;
    s.kind = ScoreKind::Hs;
    s.entries = {
        {"a", 0, 5, 0.3}, {"a", 1, 5, 0.9}, {"a", 2, 5, 0.5},  // three persons, one frame
        {"a", 0, 6, 0.2},
        {"b", 0, 3, 0.7},
    };
    const FrameScoreSeries f = frame_aggregate(s, FillPolicy::MinObserved);
    std::map<std::pair<std::string, long>, double> by_frame;
    for (const auto& e : f.entries) by_frame[{e.video_id, e.frame_index}] = e.score;
    CHECK(by_frame.at({"a", 5}) == 0.9);
    CHECK(by_frame.at({"a", 6}) == 0.2);
    CHECK(by_frame.at({"b", 3}) == 0.7);

    SUBCASE("single person: frame score equals the person score") {
        ScoreSeries one;
        one.entries = {{"v", 7, 10, 0.42}};
        const FrameScoreSeries g = frame_aggregate(one, FillPolicy::Zero);
        REQUIRE(g.entries.size() == 1);
        CHECK(g.entries[0].score == 0.42);
    }

    SUBCASE("fill policy covers the declared video range") {
        std::map<std::string, FrameRange> ranges{{"a", {4, 7}}, {"b", {3, 3}}};
        const FrameScoreSeries g = frame_aggregate(s, FillPolicy::MinObserved, ranges);
        std::map<std::pair<std::string, long>, double> m;
        for (const auto& e : g.entries) m[{e.video_id, e.frame_index}] = e.score;
        REQUIRE(m.size() == 5);
        CHECK(m.at({"a", 4}) == 0.2);  // min observed frame score in video a
        CHECK(m.at({"a", 7}) == 0.2);
        const FrameScoreSeries z = frame_aggregate(s, FillPolicy::Zero, ranges);
        std::map<std::pair<std::string, long>, double> mz;
        for (const auto& e : z.entries) mz[{e.video_id, e.frame_index}] = e.score;
        CHECK(mz.at({"a", 4}) == 0.0);
    }

    SUBCASE("random series agree with a brute-force group-by-max oracle") {
        Rng rng(5);
        ScoreSeries random_series;
        random_series.kind = ScoreKind::Hs;
        std::map<std::pair<std::string, long>, double> oracle;
        for (int i = 0; i < 500; ++i) {
            ScoreEntry e;
            e.video_id = std::string(1, static_cast<char>('a' + rng.below(3)));
            e.person_id = static_cast<int>(rng.below(4));
            e.frame_index = static_cast<long>(rng.below(30));
            e.score = rng.uniform();
            random_series.entries.push_back(e);
            const auto key = std::make_pair(e.video_id, e.frame_index);
            const auto it = oracle.find(key);
            if (it == oracle.end() || e.score > it->second) oracle[key] = e.score;
        }
        const FrameScoreSeries g = frame_aggregate(random_series, FillPolicy::MinObserved);
        std::map<std::string, double> min_frame;
        for (const auto& [key, v] : oracle) {
            const auto it = min_frame.find(key.first);
            if (it == min_frame.end() || v < it->second) min_frame[key.first] = v;
        }
        for (const auto& e : g.entries) {
            const auto it = oracle.find({e.video_id, e.frame_index});
            if (it != oracle.end()) {
                CHECK(e.score == it->second);
            } else {
                CHECK(e.score == min_frame.at(e.video_id));
            }
        }
        // Aggregated frame score dominates every contributing person score.
        for (const auto& e : random_series.entries) {
            const auto it = oracle.find({e.video_id, e.frame_index});
            REQUIRE(it != oracle.end());
            CHECK(it->second >= e.score);
        }
    }
}

TEST_CASE("ctd/ftd scores: non-negative, center-frame indexed, dual-path recompute") {
    const Fixture fx;
    const Matrix pe = uetd::make_positional(fx.weights.config);
    const PoseWindow& w0 = fx.windows[0];

    const ScoreEntry cs = ctd_score(w0, fx.weights, fx.scheme);
    CHECK(cs.frame_index == w0.start_frame + w0.beta / 2);
    CHECK(cs.score >= 0.0);

    // Independent recomputation through the raw model calls.
    const Matrix tokens = tokenize(w0, fx.scheme).tokens;
    const Matrix memory = uetd::encode_eval(fx.weights, tokens, pe);
    const Matrix rec = uetd::decode_eval(fx.weights, memory, uetd::Branch::Ctd);
    CHECK(cs.score == uetd::mse_loss(rec, tokens));

    const PoseWindow* next = nullptr;
    for (const auto& w : fx.windows)
        if (w.start_frame == w0.start_frame + w0.beta) next = &w;
    REQUIRE(next != nullptr);
    const ScoreEntry fs = ftd_score(w0, *next, fx.weights, fx.scheme);
    CHECK(fs.frame_index == next->start_frame + next->beta / 2);
    CHECK(fs.score >= 0.0);
    const Matrix next_tokens = tokenize(*next, fx.scheme).tokens;
    const Matrix fut = uetd::decode_eval(fx.weights, memory, uetd::Branch::Ftd);
    CHECK(fs.score == uetd::mse_loss(fut, next_tokens));

    SUBCASE("windows not exactly beta apart are a pairing error") {
        const PoseWindow* too_close = nullptr;
        for (const auto& w : fx.windows)
            if (w.start_frame == w0.start_frame + 1) too_close = &w;
        REQUIRE(too_close != nullptr);
        CHECK_THROWS_AS(ftd_score(w0, *too_close, fx.weights, fx.scheme), std::invalid_argument);
    }
}

TEST_CASE("score_tracks matches the single-window entry points and is thread-stable") {
    const Fixture fx;
    synth::SynthScenario sc;
    sc.seed = 56;
    sc.n_videos = 2;
    sc.n_persons = 2;
    sc.n_frames = 40;
    sc.k = 2;
    const auto tracks = synth::gen_normal_tracks(sc);

    const TrackScores a = score_tracks(tracks, fx.weights, fx.scheme, 8, 1, 1);
    const TrackScores b = score_tracks(tracks, fx.weights, fx.scheme, 8, 1, 2);
    REQUIRE(a.cs.entries.size() == b.cs.entries.size());
    for (std::size_t i = 0; i < a.cs.entries.size(); ++i)
        CHECK(a.cs.entries[i].score == b.cs.entries[i].score);
    REQUIRE(a.fs.entries.size() == b.fs.entries.size());
    for (std::size_t i = 0; i < a.fs.entries.size(); ++i)
        CHECK(a.fs.entries[i].score == b.fs.entries[i].score);

    // Spot-check against the single-window entry point.
    const auto windows = extract_windows(tracks[0], 8, 1);
    const ScoreEntry direct = ctd_score(windows[3], fx.weights, fx.scheme);
    bool found = false;
    for (const auto& e : a.cs.entries)
        if (e.video_id == direct.video_id && e.person_id == direct.person_id &&
            e.frame_index == direct.frame_index) {
            CHECK(e.score == direct.score);
            found = true;
        }
    CHECK(found);
}

TEST_CASE("score series files round-trip exactly") {
    const std::string dir = testutil::temp_dir("scores");
    Rng rng(6);
    ScoreSeries s;
    s.kind = ScoreKind::Fs;
    for (long f = 0; f < 40; ++f)
        s.entries.push_back({"vid" + std::to_string(f % 3), static_cast<int>(f % 2), f,
                             rng.uniform(-1e-3, 12.0)});
    write_score_series(dir + "/s.csv", s);
    const ScoreSeries r = read_score_series(dir + "/s.csv");
    CHECK(r.kind == ScoreKind::Fs);
    REQUIRE(r.entries.size() == s.entries.size());
    for (std::size_t i = 0; i < s.entries.size(); ++i) {
        CHECK(r.entries[i].video_id == s.entries[i].video_id);
        CHECK(r.entries[i].person_id == s.entries[i].person_id);
        CHECK(r.entries[i].frame_index == s.entries[i].frame_index);
        CHECK(r.entries[i].score == s.entries[i].score);  // %.17g is lossless
    }

    FrameScoreSeries f;
    f.entries = {{"v", 0, 0.25}, {"v", 1, 1.0 / 3.0}};
    write_frame_scores(dir + "/f.csv", f);
    const FrameScoreSeries rf = read_frame_scores(dir + "/f.csv");
    REQUIRE(rf.entries.size() == 2);
    CHECK(rf.entries[1].score == 1.0 / 3.0);
}
