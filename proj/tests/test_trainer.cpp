#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "garnet/errors.hpp"
#include "garnet/trainer.hpp"

using namespace garnet;

namespace {

// Frames of two well-separated classes in 8 dimensions.
struct ToyData {
  std::vector<FeatureFrame> frames;
  TrainingSet set;
};

ToyData separable(std::size_t per_class, std::uint64_t seed) {
  ToyData d;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 0.05);
  for (std::size_t c = 0; c < 2; ++c) {
    for (std::size_t i = 0; i < per_class; ++i) {
      FeatureFrame f;
      for (int k = 0; k < 8; ++k) f.values.push_back(static_cast<float>((k % 2 == static_cast<int>(c) ? 0.8 : 0.2) + noise(rng)));
      d.frames.push_back(f);
    }
  }
  d.set.label_names = {"a", "b"};
  for (std::size_t i = 0; i < d.frames.size(); ++i) {
    d.set.frames.push_back(&d.frames[i]);
    d.set.labels.push_back(i / per_class);
  }
  return d;
}

TrainingSet labelled(const std::vector<FeatureFrame>& frames, const std::vector<std::size_t>& labels,
                     std::size_t classes) {
  TrainingSet s;
  for (std::size_t c = 0; c < classes; ++c) s.label_names.push_back("c" + std::to_string(c));
  for (std::size_t i = 0; i < frames.size(); ++i) {
    s.frames.push_back(&frames[i]);
    s.labels.push_back(labels[i]);
  }
  return s;
}

double mean_active(const std::vector<TrainLogRecord>& log, std::size_t from, std::size_t to) {
  double s = 0.0;
  for (std::size_t i = from; i < to; ++i) s += log[i].active_fraction;
  return s / static_cast<double>(to - from);
}

}  // namespace

TEST_CASE("triplet loss hinge") {
  CHECK(triplet_loss(0.5, 2.0, 1.0) == 0.0);
  CHECK(triplet_loss(1.5, 2.0, 1.0) == doctest::Approx(0.5));
  CHECK(triplet_loss(2.0, 1.0, 1.0) == doctest::Approx(2.0));
  CHECK(triplet_loss(1.0, 1.0, 0.0) == 0.0);
  CHECK_THROWS_AS(triplet_loss(-1.0, 1.0, 1.0), InputError);
}

TEST_CASE("sampled triplets are valid and seed-deterministic") {
  ToyData d = separable(10, 1);
  const TripletSampler sampler(d.set);
  std::mt19937_64 r1(5), r2(5);
  for (int i = 0; i < 1000; ++i) {
    const Triplet a = sampler.sample(r1);
    const Triplet b = sampler.sample(r2);
    CHECK(a.anchor == b.anchor);
    CHECK(a.positive == b.positive);
    CHECK(a.negative == b.negative);
    CHECK(a.anchor != a.positive);
    CHECK(d.set.labels[a.anchor] == d.set.labels[a.positive]);
    CHECK(d.set.labels[a.anchor] != d.set.labels[a.negative]);
  }
}

TEST_CASE("anchor categories follow the count of valid triplets") {
  const std::vector<std::size_t> sizes{2, 3, 4, 5, 6};
  std::vector<FeatureFrame> frames;
  std::vector<std::size_t> labels;
  for (std::size_t c = 0; c < sizes.size(); ++c) {
    for (std::size_t i = 0; i < sizes[c]; ++i) {
      frames.push_back(FeatureFrame{{static_cast<float>(c)}, Channel::depth});
      labels.push_back(c);
    }
  }
  const TrainingSet set = labelled(frames, labels, sizes.size());
  const double n = 20.0;
  std::vector<double> weight;
  double total = 0.0;
  for (std::size_t s : sizes) {
    weight.push_back(static_cast<double>(s) * static_cast<double>(s - 1) * (n - static_cast<double>(s)));
    total += weight.back();
  }
  const TripletSampler sampler(set);
  std::mt19937_64 rng(99);
  const int draws = 10000;
  std::vector<int> hist(sizes.size(), 0);
  for (int i = 0; i < draws; ++i) ++hist[labels[sampler.sample(rng).anchor]];
  for (std::size_t c = 0; c < sizes.size(); ++c) {
    const double p = weight[c] / total;
    const double sigma = std::sqrt(draws * p * (1 - p));
    CHECK(std::abs(hist[c] - draws * p) <= 3 * sigma);
  }
}

TEST_CASE("sampler needs two categories") {
  std::vector<FeatureFrame> frames(4, FeatureFrame{{0.0f}, Channel::depth});
  const TrainingSet set = labelled(frames, {0, 0, 0, 0}, 1);
  CHECK_THROWS_AS(TripletSampler{set}, ConfigError);
}

TEST_CASE("an inactive batch gives zero gradients") {
  ToyData d = separable(4, 2);
  const Network net(8, {64, 32}, 3);
  Graph g;
  const auto params = bind_parameters(g, net);
  const std::vector<Triplet> batch{{0, 1, 4}, {5, 6, 2}};
  std::size_t active = 99;
  // A hugely negative margin closes every hinge.
  const Var loss = build_triplet_loss(g, net, params, d.set, batch, -1e6, &active);
  const Gradients grads = backward(g, params, loss);
  CHECK(active == 0);
  CHECK(g.value(loss)(0, 0) == 0.0);
  for (const auto& m : grads) CHECK(m.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("training separates two classes") {
  ToyData d = separable(50, 4);
  TrainConfig cfg;
  cfg.iterations = 2000;
  cfg.seed = 17;
  cfg.hidden_widths = {16, 8};
  cfg.iterations_per_epoch = 125;
  const TrainResult r = train(cfg, d.set);
  REQUIRE(r.log.size() == 2000);
  const double start = mean_active(r.log, 0, 50);
  const double end = mean_active(r.log, 1950, 2000);
  CHECK(start > 0.5);
  CHECK(end < 0.1 * start);
  // Regression pin on the measured run.
  CHECK(end == 0.0);
  CHECK(r.log[999].lr == 1e-3);
  CHECK(r.log[1000].lr == doctest::Approx(1e-4).epsilon(1e-12));
}

TEST_CASE("training is deterministic for a seed") {
  ToyData d = separable(20, 5);
  TrainConfig cfg;
  cfg.iterations = 200;
  cfg.hidden_widths = {8};
  const TrainResult a = train(cfg, d.set);
  const TrainResult b = train(cfg, d.set);
  CHECK(a.net == b.net);
  cfg.seed = 2;
  const TrainResult c = train(cfg, d.set);
  CHECK_FALSE(a.net == c.net);
}

TEST_CASE("a zero margin trains and stays finite") {
  ToyData d = separable(20, 6);
  TrainConfig cfg;
  cfg.margin = 0.0;
  cfg.iterations = 300;
  cfg.hidden_widths = {8};
  const TrainResult r = train(cfg, d.set);
  for (const auto& rec : r.log) CHECK(std::isfinite(rec.loss));
  CHECK(r.iterations_per_epoch == 2);  // ceil(40 / 32)
  CHECK(r.log.back().loss >= 0.0);
}

TEST_CASE("config validation") {
  TrainConfig cfg;
  cfg.margin = -1.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = TrainConfig{};
  cfg.batch_size = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = TrainConfig{};
  cfg.iterations = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("train log is CSV with a header") {
  std::ostringstream out;
  const std::vector<TrainLogRecord> log{{0, 1e-3, 0.5, 0.25}};
  write_train_log(out, log);
  CHECK(out.str().rfind("step,lr,loss,active_fraction\n0,", 0) == 0);
}
