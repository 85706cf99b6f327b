// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits nonzero if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "garnet/checkpoint.hpp"
#include "garnet/pipeline.hpp"
#include "garnet/report.hpp"

using namespace garnet;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

int failures = 0;

void report(int id, const char* name, bool ok, const std::string& detail) {
  std::printf("%s [%d] %s: %s\n", ok ? "PASS" : "FAIL", id, name, detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string fmt(const char* pattern, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, pattern, args...);
  return buf;
}

constexpr std::uint64_t kSeed = 1;

// ---- 1: analytic gradients against central differences -------------------

void gradient_check() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(derive_seed(kSeed, 100));
  std::uniform_int_distribution<std::size_t> dim_d(2, 12), width_d(2, 12), depth_d(1, 2), batch_d(1, 6);
  std::uniform_real_distribution<double> value_d(0.0, 1.0), margin_d(0.0, 2.0);
  const double eps = 1e-5;
  double worst = 0.0;
  for (int config = 0; config < 100; ++config) {
    const std::size_t dim = dim_d(rng);
    std::vector<std::size_t> hidden(depth_d(rng));
    for (auto& w : hidden) w = width_d(rng);
    Network net(dim, hidden, rng());
    // Move slopes off their initial value so their gradients are exercised.
    for (std::size_t l = 0; l + 1 < net.layer_count(); ++l) net.parameters()[l * 3 + 2](0, 0) = value_d(rng) - 0.5;

    std::vector<FeatureFrame> frames(9);
    for (auto& f : frames) {
      for (std::size_t i = 0; i < dim; ++i) f.values.push_back(static_cast<float>(value_d(rng)));
    }
    TrainingSet set;
    set.label_names = {"x", "y", "z"};
    for (std::size_t i = 0; i < frames.size(); ++i) {
      set.frames.push_back(&frames[i]);
      set.labels.push_back(i % 3);
    }
    const TripletSampler sampler(set);
    std::vector<Triplet> batch(batch_d(rng));
    for (auto& t : batch) t = sampler.sample(rng);
    const double margin = margin_d(rng);

    Graph g;
    const auto params = bind_parameters(g, net);
    const Var loss = build_triplet_loss(g, net, params, set, batch, margin);
    const Gradients analytic = backward(g, params, loss);

    double diff2 = 0.0, an2 = 0.0, fd2 = 0.0;
    for (std::size_t k = 0; k < analytic.size(); ++k) {
      for (Eigen::Index i = 0; i < analytic[k].size(); ++i) {
        Network plus = net, minus = net;
        plus.parameters()[k].data()[i] += eps;
        minus.parameters()[k].data()[i] -= eps;
        const double fd = (score_triplets(plus, set, batch, margin).mean_loss -
                           score_triplets(minus, set, batch, margin).mean_loss) /
                          (2 * eps);
        const double an = analytic[k].data()[i];
        diff2 += (an - fd) * (an - fd);
        an2 += an * an;
        fd2 += fd * fd;
      }
    }
    const double scale = std::max({std::sqrt(an2), std::sqrt(fd2), 1e-12});
    worst = std::max(worst, std::sqrt(diff2) / scale);
  }
  const double secs = seconds_since(t0);
  report(1, "gradient correctness", worst < 1e-4 && secs < 10.0,
         fmt("100 configs, max relative error %.3g (tol 1e-4), %.2f s (limit 10 s)", worst, secs));
}

// ---- 2: KDE against brute-force summation; normalization ----------------

double brute_density(const std::vector<GSPoint>& pts, double h, GSPoint q) {
  long double sum = 0.0L;
  for (const auto& p : pts) {
    const long double dx = static_cast<long double>(q.x) - p.x;
    const long double dy = static_cast<long double>(q.y) - p.y;
    sum += std::exp(-(dx * dx + dy * dy) / (2.0L * h * h));
  }
  return static_cast<double>(sum /
                             (static_cast<long double>(pts.size()) * 2.0L * std::numbers::pi_v<long double> * h * h));
}

void kde_check() {
  std::mt19937_64 rng(derive_seed(kSeed, 101));
  std::uniform_real_distribution<double> u(-4.0, 4.0), hd(0.05, 2.0);
  std::normal_distribution<double> n(0.0, 1.0);
  std::uniform_int_distribution<int> size_d(1, 60);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<GSPoint> pts(size_d(rng));
    const GSPoint c{u(rng), u(rng)};
    for (auto& p : pts) p = {c.x + n(rng), c.y + n(rng)};
    const GarmentCluster cluster("c", pts, trial % 2 == 0 ? hd(rng) : 0.0);
    const GSPoint q{c.x + 2 * n(rng), c.y + 2 * n(rng)};
    const double want = brute_density(pts, cluster.bandwidth(), q);
    const double got = kde_density(cluster, q);
    const double rel = want == 0.0 ? (got == 0.0 ? 0.0 : 1.0) : std::abs(got - want) / want;
    worst = std::max(worst, rel);
  }

  double worst_norm = 0.0;
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<GSPoint> pts(40);
    for (auto& p : pts) p = {0.7 * n(rng), 0.7 * n(rng)};
    const GarmentCluster cluster("c", pts);
    // Box of side 12 around the origin; the kernel tail outside is negligible.
    std::uniform_real_distribution<double> box(-6.0, 6.0);
    const int samples = 1000000;
    double sum = 0.0;
    for (int i = 0; i < samples; ++i) sum += kde_density(cluster, {box(rng), box(rng)});
    worst_norm = std::max(worst_norm, std::abs(144.0 * sum / samples - 1.0));
  }
  report(2, "KDE oracle equivalence", worst <= 1e-12 && worst_norm < 0.02,
         fmt("1000 cases, max relative error %.3g (tol 1e-12); Monte Carlo integral (5 clusters, 1e6 samples each) off by at most %.4f (tol 0.02)", worst,
             worst_norm));
}

// ---- 3: every cluster of a trained map covers its target -----------------

void coverage_check(const std::vector<SimilarityMap>& maps) {
  double worst_margin = INFINITY;
  std::size_t clusters = 0;
  for (SimilarityMap map : maps) {
    for (double q : {0.8, 0.9, 0.95, 0.99}) {
      map.fit_regions(q);
      for (const auto& c : map.clusters()) {
        const double m = static_cast<double>(c.points().size());
        std::size_t inside = 0;
        for (const auto& p : c.points()) inside += c.contains(p) ? 1 : 0;
        worst_margin = std::min(worst_margin, static_cast<double>(inside) / m - (q - 1.0 / m));
        ++clusters;
      }
    }
  }
  report(3, "coverage soundness", worst_margin >= 0.0,
         fmt("%zu cluster fits over 4 coverages; min (covered - (q - 1/m)) = %.5f (need >= 0)", clusters,
             worst_margin));
}

// ---- 4: streaming decision points against batch recomputation -----------

void streaming_check(const SimilarityMap& map) {
  std::mt19937_64 rng(derive_seed(kSeed, 104));
  std::uniform_int_distribution<std::size_t> cluster_d(0, map.size() - 1), len_d(1, 80);
  std::normal_distribution<double> n(0.0, 1.0);
  double worst = 0.0;
  std::size_t stop_mismatch = 0, stops = 0;
  for (int seq = 0; seq < 200; ++seq) {
    // Wander between clusters with varying noise so some sequences stop and
    // some do not.
    const double noise = 0.2 + 0.3 * (seq % 7);
    std::vector<GSPoint> pts(len_d(rng));
    GSPoint anchor = map.clusters()[cluster_d(rng)].centroid();
    for (auto& p : pts) {
      if (seq % 3 == 0 && rng() % 10 == 0) anchor = map.clusters()[cluster_d(rng)].centroid();
      p = {anchor.x + noise * n(rng), anchor.y + noise * n(rng)};
    }
    DecisionState state(map.size());
    for (const auto& p : pts) state.push_frame(p, map);

    // Offline: means from scratch, votes from scratch, fractions from scratch.
    std::vector<ClusterId> votes;
    std::optional<std::size_t> brute_stop;
    for (std::size_t k = 1; k <= pts.size(); ++k) {
      double sx = 0, sy = 0;
      for (std::size_t i = 0; i < k; ++i) {
        sx += pts[i].x;
        sy += pts[i].y;
      }
      const GSPoint mean{sx / k, sy / k};
      const GSPoint dp = state.decision_points()[k - 1];
      worst = std::max({worst, std::abs(dp.x - mean.x), std::abs(dp.y - mean.y)});
      votes.push_back(classify_point(map, mean));
      if (!brute_stop && k >= 5) {
        for (std::size_t l = 0; l < map.size(); ++l) {
          const auto c = static_cast<std::size_t>(std::count(votes.begin(), votes.end(), ClusterId{l}));
          if (c > 0 && static_cast<double>(c) / static_cast<double>(k) >= 0.8) brute_stop = k;
        }
      }
    }
    const auto& ev = state.stop_event();
    const std::optional<std::size_t> online = ev ? std::optional<std::size_t>(ev->frame) : std::nullopt;
    stops += online ? 1 : 0;
    stop_mismatch += online == brute_stop ? 0 : 1;
  }
  report(4, "streaming equivalence", worst <= 1e-9 && stop_mismatch == 0,
         fmt("200 sequences (%zu stopped), max |DP - batch mean| %.3g (tol 1e-9), stop-frame mismatches %zu",
             stops, worst, stop_mismatch));
}

// ---- 5: stop frame is monotone in the threshold --------------------------

void monotonicity_check(const SimilarityMap& map) {
  std::mt19937_64 rng(derive_seed(kSeed, 105));
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::size_t violations = 0, stopped = 0;
  for (int trace = 0; trace < 100; ++trace) {
    // Points sit on a centroid or far away, so each GSP-mode vote is known
    // in advance.
    const double p_major = 0.5 + 0.5 * u(rng);
    std::vector<GSPoint> pts;
    for (int i = 0; i < 60; ++i) {
      const double r = u(rng);
      if (r < p_major) {
        pts.push_back(map.clusters()[0].centroid());
      } else if (r < p_major + (1 - p_major) / 2) {
        pts.push_back(map.clusters()[1].centroid());
      } else {
        pts.push_back({1e6, 1e6});
      }
    }
    std::size_t prev = SIZE_MAX;
    for (double th : {0.9, 0.8, 0.7}) {
      const auto r = evaluate_points(map, pts, VoteMode::similarity_point, {th, 5});
      const std::size_t frame = r.stop ? r.stop->frame : SIZE_MAX;
      stopped += r.stop ? 1 : 0;
      if (frame > prev) ++violations;
      prev = frame;
    }
  }
  report(5, "early-stop monotonicity", violations == 0,
         fmt("100 traces x 3 thresholds (%zu runs stopped), %zu violations", stopped, violations));
}

// ---- 6-9: synthetic end-to-end runs ---------------------------------------

struct TaskRun {
  LoocvModels models;
  EvalReport dp;
  EvalReport gsp;
  double seconds = 0.0;
};

TaskRun run_task(const Dataset& ds, Task task, const RunConfig& base) {
  const auto t0 = Clock::now();
  RunConfig cfg = base;
  cfg.train.task = task;
  TaskRun out;
  out.models = train_loocv(ds, cfg);
  ReportContext ctx;
  ctx.task = task;
  ctx.coverage = cfg.coverage;
  ctx.decision = cfg.decision;
  ctx.mode = VoteMode::decision_point;
  out.dp = summarize(ctx, ds.categories(task), evaluate_loocv(out.models, VoteMode::decision_point, cfg.decision));
  ctx.mode = VoteMode::similarity_point;
  out.gsp = summarize(ctx, ds.categories(task), evaluate_loocv(out.models, VoteMode::similarity_point, cfg.decision));
  out.seconds = seconds_since(t0);
  return out;
}

std::string folds_text(const EvalReport& r) {
  std::string s;
  for (const auto& f : r.folds) s += fmt("%s%.3f", s.empty() ? "" : " ", f.average);
  return s;
}

}  // namespace

int main() {
  std::printf("acceptance: seed %llu\n", static_cast<unsigned long long>(kSeed));
  std::fflush(stdout);

  RunConfig config;  // defaults: 20000 iterations, batch 32, q = 0.95, theta 0.8
  config.train.seed = kSeed;

  const auto t_total = Clock::now();
  const Dataset ds = synth_generate(SynthSpec{}, derive_seed(kSeed, kSynthStream));
  const TaskRun shape = run_task(ds, Task::shape, config);
  const TaskRun weight = run_task(ds, Task::weight, config);
  const double e2e_seconds = seconds_since(t_total);

  gradient_check();
  kde_check();

  std::vector<SimilarityMap> maps;
  for (const auto* run : {&shape, &weight}) {
    for (const auto& m : run->models.models) maps.push_back(m.map);
  }
  coverage_check(maps);
  streaming_check(shape.models.models.front().map);
  monotonicity_check(shape.models.models.front().map);

  report(6, "synthetic LOOCV reproduction",
         shape.dp.average >= 0.90 && weight.dp.average >= 0.90 && e2e_seconds < 600.0,
         fmt("%zu sequences / %zu frames; DP shape %.4f (folds %s), weight %.4f (folds %s), need >= 0.90; "
             "%.1f s (limit 600 s)",
             ds.sequences.size(), ds.frame_count(), shape.dp.average, folds_text(shape.dp).c_str(),
             weight.dp.average, folds_text(weight.dp).c_str(), e2e_seconds));

  {
    const double noise = 2.0;
    const Dataset noisy = synth_generate(SynthSpec{}.with_noise(noise), derive_seed(kSeed, kSynthStream));
    bool ok = true;
    std::string detail = fmt("noise x%.0f:", noise);
    for (Task task : {Task::shape, Task::weight}) {
      const TaskRun r = run_task(noisy, task, config);
      ok = ok && r.dp.average >= r.gsp.average;
      detail += fmt(" %s DP %.4f [%s] vs GSP %.4f [%s];", std::string(to_string(task)).c_str(), r.dp.average,
                    folds_text(r.dp).c_str(), r.gsp.average, folds_text(r.gsp).c_str());
    }
    report(7, "DP-vs-GSP trend", ok, detail + " need DP >= GSP in the 4-fold mean");
  }

  {
    const ModelCheckpoint& ck = shape.models.models.front();
    DecisionConfig never_stop;
    never_stop.min_frames = SIZE_MAX;
    std::size_t frames = 0;
    const auto t0 = Clock::now();
    for (std::size_t idx : shape.models.folds.front().test) {
      const auto r = evaluate_sequence(ck.net, ck.map, ds.sequences[idx].frames, VoteMode::decision_point, never_stop);
      frames += r.state.frame_count();
    }
    const double ms = 1000.0 * seconds_since(t0) / static_cast<double>(frames);
    report(8, "per-frame latency", ms < 100.0,
           fmt("%zu frames, mean %.4f ms per frame (forward + votes over %zu clusters), limit 100 ms", frames, ms,
               ck.map.size()));
  }

  {
    // Retrain fold 1 from the same seed and compare bytes.
    RunConfig cfg = config;
    cfg.train.task = Task::shape;
    cfg.train.seed = derive_seed(kSeed, kTrainStream, 0);
    const ModelCheckpoint again = fit_model(ds, shape.models.folds.front().train, cfg);
    const ModelCheckpoint& first = shape.models.models.front();
    const std::string bytes = serialize(first);
    const bool same_checkpoint = serialize(again) == bytes;

    const EmbeddedSplit split_a = embed_split(first.net, ds, Task::shape, shape.models.folds.front().test);
    const EmbeddedSplit split_b = embed_split(again.net, ds, Task::shape, shape.models.folds.front().test);
    ReportContext ctx;
    const auto rep = [&](const ModelCheckpoint& m, const EmbeddedSplit& s) {
      return to_json(summarize(ctx, ds.shapes, {evaluate_split(m.map, s, VoteMode::decision_point, {}, 1)})).dump();
    };
    const bool same_report = rep(first, split_a) == rep(again, split_b);

    const ModelCheckpoint loaded = deserialize(bytes);
    std::size_t mismatches = 0, checked = 0;
    for (std::size_t idx : shape.models.folds.front().test) {
      const auto& frames = ds.sequences[idx].frames;
      for (const auto& f : frames) {
        const GSPoint a = forward(first.net, f);
        const GSPoint b = forward(loaded.net, f);
        mismatches += (a == b && classify_point(first.map, a) == classify_point(loaded.map, b)) ? 0 : 1;
        ++checked;
      }
      const auto ra = evaluate_sequence(first.net, first.map, frames, VoteMode::decision_point);
      const auto rb = evaluate_sequence(loaded.net, loaded.map, frames, VoteMode::decision_point);
      mismatches += ra.prediction == rb.prediction && ra.state.frame_count() == rb.state.frame_count() ? 0 : 1;
    }
    report(9, "determinism and persistence", same_checkpoint && same_report && mismatches == 0,
           fmt("retrained checkpoint identical: %s (%zu bytes); report identical: %s; round-trip mismatches %zu "
               "over %zu frames",
               same_checkpoint ? "yes" : "no", bytes.size(), same_report ? "yes" : "no", mismatches, checked));
  }

  std::printf("acceptance: %d failure(s), total %.1f s\n", failures, seconds_since(t_total));
  return failures == 0 ? 0 : 1;
}
