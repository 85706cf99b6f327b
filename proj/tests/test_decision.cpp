#include <doctest.h>

#include <random>
#include <sstream>

#include "garnet/decision.hpp"
#include "garnet/errors.hpp"

using namespace garnet;

namespace {

std::vector<GSPoint> grid_around(GSPoint c) {
  std::vector<GSPoint> out;
  for (int i = -2; i <= 2; ++i) {
    for (int j = -2; j <= 2; ++j) out.push_back({c.x + 0.5 * i, c.y + 0.5 * j});
  }
  return out;
}

// 2x2 square clusters "a" around (-5, 0) and "b" around (5, 0); far away
// points are unknown.
SimilarityMap ab_map() {
  std::vector<GarmentCluster> cs;
  cs.emplace_back("a", grid_around({-5, 0}), 0.5);
  cs.emplace_back("b", grid_around({5, 0}), 0.5);
  SimilarityMap map(Task::shape, std::move(cs));
  map.fit_regions(1.0);
  return map;
}

constexpr GSPoint kA{-5, 0};
constexpr GSPoint kB{5, 0};
constexpr GSPoint kFar{0, 50};

std::vector<GSPoint> repeat(std::initializer_list<std::pair<GSPoint, int>> runs) {
  std::vector<GSPoint> out;
  for (const auto& [p, n] : runs) out.insert(out.end(), n, p);
  return out;
}

// Stop frame by recomputing fractions from scratch at every prefix.
std::optional<std::size_t> brute_stop(const std::vector<ClusterId>& votes, std::size_t labels,
                                      const DecisionConfig& cfg) {
  for (std::size_t n = cfg.min_frames; n <= votes.size(); ++n) {
    for (std::size_t l = 0; l < labels; ++l) {
      std::size_t c = 0;
      for (std::size_t i = 0; i < n; ++i) c += votes[i] == ClusterId{l} ? 1 : 0;
      if (c > 0 && static_cast<double>(c) / static_cast<double>(n) >= cfg.threshold) return n;
    }
  }
  return std::nullopt;
}

}  // namespace

TEST_CASE("stop fires exactly at 24 of 30") {
  const SimilarityMap map = ab_map();
  DecisionState s(2, {}, VoteMode::similarity_point);
  const auto pts = repeat({{kFar, 6}, {kA, 24}});
  std::optional<StopEvent> first;
  for (const auto& p : pts) {
    const auto e = s.push_frame(p, map);
    if (e && !first) first = e;
  }
  REQUIRE(first);
  CHECK(first->frame == 30);
  CHECK(first->label == 0);
  CHECK(first->fraction == 0.8);
  CHECK(finalize(s) == ClusterId{0});
}

TEST_CASE("stop fires exactly at 48 of 60") {
  const SimilarityMap map = ab_map();
  const auto r = evaluate_points(map, repeat({{kFar, 12}, {kB, 48}}), VoteMode::similarity_point);
  REQUIRE(r.stop);
  CHECK(r.stop->frame == 60);
  CHECK(r.stop->label == 1);
  CHECK(r.prediction == ClusterId{1});
}

TEST_CASE("no stop before min_frames") {
  const SimilarityMap map = ab_map();
  DecisionState s(2, {}, VoteMode::decision_point);
  for (int i = 0; i < 4; ++i) CHECK_FALSE(s.push_frame(kA, map));
  const auto e = s.push_frame(kA, map);
  REQUIRE(e);
  CHECK(e->frame == 5);
  CHECK(e->fraction == 1.0);
}

TEST_CASE("unknown votes count in the denominator and can leave no prediction") {
  const SimilarityMap map = ab_map();
  const auto r = evaluate_points(map, repeat({{kA, 3}, {kFar, 3}, {kB, 3}}), VoteMode::similarity_point);
  CHECK_FALSE(r.stop);
  CHECK(r.prediction == std::nullopt);
  CHECK(r.state.tally().unknown_fraction() == doctest::Approx(1.0 / 3.0));
  CHECK_THROWS_AS(finalize(DecisionState(2)), InputError);
}

TEST_CASE("decision points are running means of the pushed points") {
  const SimilarityMap map = ab_map();
  std::mt19937_64 rng(1);
  std::normal_distribution<double> d(0.0, 4.0);
  for (int seq = 0; seq < 50; ++seq) {
    DecisionState s(2, {}, VoteMode::decision_point);
    std::vector<GSPoint> pts;
    for (int i = 0; i < 40; ++i) {
      pts.push_back({d(rng), d(rng)});
      s.push_frame(pts.back(), map);
      double sx = 0, sy = 0;
      for (const auto& p : pts) {
        sx += p.x;
        sy += p.y;
      }
      const GSPoint dp = s.decision_points().back();
      CHECK(std::abs(dp.x - sx / pts.size()) < 1e-9);
      CHECK(std::abs(dp.y - sy / pts.size()) < 1e-9);
      CHECK(s.votes().back() == classify_point(map, dp));
    }
    const auto stop = first_stop(s.votes(), 2, {});
    CHECK(stop.has_value() == s.stop_event().has_value());
    if (stop) CHECK(stop->frame == s.stop_event()->frame);
    CHECK((stop ? std::optional<std::size_t>(stop->frame) : std::nullopt) == brute_stop(s.votes(), 2, {}));
  }
}

TEST_CASE("lowering the threshold never delays the stop") {
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<int> v(0, 3);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<ClusterId> votes;
    for (int i = 0; i < 60; ++i) {
      const int x = v(rng);
      votes.push_back(x == 3 ? std::nullopt : ClusterId{static_cast<std::size_t>(x == 2 ? 0 : x)});
    }
    std::size_t prev = 61;
    for (double th : {0.9, 0.8, 0.7}) {
      const auto e = first_stop(votes, 2, {th, 5});
      const std::size_t frame = e ? e->frame : 61;
      CHECK(frame <= prev);
      prev = frame;
    }
  }
}

TEST_CASE("averaging beats per-frame votes on a noisy crafted sequence") {
  const SimilarityMap map = ab_map();
  // Frames scatter around the "a" cluster, each far enough off to miss its
  // region, but they average back onto it.
  std::vector<GSPoint> pts;
  for (int i = 0; i < 20; ++i) pts.push_back(i % 2 == 0 ? GSPoint{-5, 3} : GSPoint{-5, -3});
  const auto dp = evaluate_points(map, pts, VoteMode::decision_point);
  const auto gsp = evaluate_points(map, pts, VoteMode::similarity_point);
  CHECK(dp.prediction == ClusterId{0});
  REQUIRE(dp.stop);
  CHECK(dp.stop->frame == 5);
  CHECK(gsp.prediction == std::nullopt);
}

TEST_CASE("trace has one row per frame with cumulative fractions") {
  const SimilarityMap map = ab_map();
  const auto r = evaluate_points(map, repeat({{kFar, 1}, {kA, 4}}), VoteMode::similarity_point);
  std::ostringstream out;
  write_trace(out, r.state, map);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "frame,gsp_x,gsp_y,dp_x,dp_y,vote,frac_a,frac_b,frac_unknown");
  std::size_t rows = 0;
  std::string last;
  while (std::getline(in, line)) {
    ++rows;
    last = line;
  }
  CHECK(rows == 5);
  CHECK(last == "5,-5,0,-4,10,a,0.80000000000000004,0,0.20000000000000001");
}

TEST_CASE("vote mode names") {
  CHECK(parse_vote_mode("dp") == VoteMode::decision_point);
  CHECK(parse_vote_mode("gsp") == VoteMode::similarity_point);
  CHECK(to_string(VoteMode::similarity_point) == "gsp");
  CHECK_THROWS_AS(parse_vote_mode("x"), ConfigError);
}
