#include "cli.hpp"

#include <chrono>
#include <fstream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "garnet/checkpoint.hpp"
#include "garnet/errors.hpp"
#include "garnet/map_export.hpp"
#include "garnet/report.hpp"

namespace garnet::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

template <typename T>
void take(const json& obj, const char* key, T& target) {
  if (obj.contains(key)) target = obj.at(key).get<T>();
}

void reject_unknown(const json& obj, std::initializer_list<const char*> known, const std::string& where) {
  for (const auto& [key, _] : obj.items()) {
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok) throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << text;
}

std::vector<std::size_t> all_indices(const Dataset& ds) {
  std::vector<std::size_t> out(ds.sequences.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = i;
  return out;
}

const Fold& find_fold(const std::vector<Fold>& folds, std::uint32_t group) {
  for (const auto& f : folds) {
    if (f.test_group == group) return f;
  }
  throw ConfigError("no instance group " + std::to_string(group) + " in dataset");
}

std::vector<double> parse_coverages(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    double v = 0.0;
    try {
      v = std::stod(item);
    } catch (const std::exception&) {
      throw InputError("bad coverage value '" + item + "'");
    }
    if (!(v > 0.0 && v <= 1.0)) throw InputError("coverage " + item + " outside (0, 1]");
    out.push_back(v);
  }
  if (out.empty()) throw InputError("empty coverage list");
  return out;
}

std::string dump(const nlohmann::ordered_json& j) { return j.dump(2) + "\n"; }

// Flags shared by the pipeline commands; applied on top of the config file.
struct CommonFlags {
  std::optional<fs::path> config;
  std::optional<fs::path> manifest;
  std::optional<std::string> task;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> iterations;
  std::optional<double> coverage;
  std::optional<double> bandwidth;
  std::optional<double> threshold;
  std::optional<std::size_t> min_frames;
  std::optional<std::uint32_t> fold;
  fs::path out_dir = "garnet-out";

  void attach(CLI::App* app) {
    app->add_option("--config", config, "JSON run configuration");
    app->add_option("--manifest", manifest, "dataset manifest (default: synthetic data)");
    app->add_option("--task", task, "shape or weight");
    app->add_option("--seed", seed, "master seed for every random choice");
    app->add_option("--iterations", iterations, "training iterations per model");
    app->add_option("--coverage", coverage, "region coverage in (0, 1]");
    app->add_option("--bandwidth", bandwidth, "KDE bandwidth (<= 0 selects Scott's rule)");
    app->add_option("--threshold", threshold, "early-stop vote fraction");
    app->add_option("--min-frames", min_frames, "frames required before an early stop");
    app->add_option("--fold", fold, "instance group held out for testing");
    app->add_option("--out-dir", out_dir, "output directory");
  }

  Setup resolve() const {
    Setup s = load_setup(config);
    if (manifest) s.manifest = *manifest;
    if (task) s.run.train.task = parse_task(*task);
    if (seed) {
      s.seed = *seed;
      s.run.train.seed = *seed;
    }
    if (iterations) s.run.train.iterations = *iterations;
    if (coverage) s.run.coverage = *coverage;
    if (bandwidth) s.run.bandwidth = *bandwidth;
    if (threshold) s.run.decision.threshold = *threshold;
    if (min_frames) s.run.decision.min_frames = *min_frames;
    if (fold) s.fold = *fold;
    s.run.validate();
    return s;
  }
};

ReportContext context_for(const Setup& s, const Dataset& ds, VoteMode mode) {
  ReportContext ctx;
  ctx.task = s.run.train.task;
  ctx.mode = mode;
  ctx.channel = ds.channel;
  ctx.coverage = s.run.coverage;
  ctx.bandwidth = s.run.bandwidth;
  ctx.decision = s.run.decision;
  return ctx;
}

void write_reports(const fs::path& dir, Task task, const EvalReport& dp, const EvalReport& gsp, std::ostream& out) {
  nlohmann::ordered_json j;
  j["task"] = std::string(to_string(task));
  j["dp"] = to_json(dp);
  j["gsp"] = to_json(gsp);
  j["reference"] = reference_rows_json();
  const std::string name = "report_" + std::string(to_string(task));
  write_text(dir / (name + ".json"), dump(j));
  const std::string text = render_table(dp, gsp) + "\n" + render_reference_rows();
  write_text(dir / (name + ".txt"), text);
  out << text;
}

// Mean wall-clock milliseconds per frame for embedding plus voting.
double measure_latency_ms(const ModelCheckpoint& ck, const Dataset& ds, std::span<const std::size_t> indices,
                          const DecisionConfig& decision) {
  using clock = std::chrono::steady_clock;
  std::size_t frames = 0;
  const auto start = clock::now();
  for (std::size_t idx : indices) {
    DecisionConfig no_stop = decision;
    no_stop.min_frames = static_cast<std::size_t>(-1);
    const auto r = evaluate_sequence(ck.net, ck.map, ds.sequences[idx].frames, VoteMode::decision_point, no_stop);
    frames += r.state.frame_count();
  }
  const double ms = std::chrono::duration<double, std::milli>(clock::now() - start).count();
  return frames == 0 ? 0.0 : ms / static_cast<double>(frames);
}

int cmd_synth(const CommonFlags& flags, std::optional<double> noise, std::ostream& out) {
  Setup s = flags.resolve();
  if (noise) s.synth = s.synth.with_noise(*noise);
  const Dataset ds = load_dataset(s);
  const fs::path manifest = export_dataset(ds, flags.out_dir);
  out << "wrote " << ds.sequences.size() << " sequences (" << ds.frame_count() << " frames) to " << manifest.string()
      << "\n";
  return kExitOk;
}

int cmd_train(const CommonFlags& flags, std::ostream& out) {
  const Setup s = flags.resolve();
  const Dataset ds = load_dataset(s);
  std::vector<std::size_t> train_idx = all_indices(ds);
  if (s.fold) train_idx = find_fold(loocv_splits(ds), *s.fold).train;

  std::vector<TrainLogRecord> log;
  const ModelCheckpoint ck = fit_model(ds, train_idx, s.run, &log);
  const std::string task(to_string(ck.task));
  const fs::path ck_path = flags.out_dir / ("model_" + task + ".ckpt");
  save_checkpoint(ck_path, ck);

  std::ostringstream log_text;
  write_train_log(log_text, log);
  write_text(flags.out_dir / ("train_log_" + task + ".csv"), log_text.str());
  std::ostringstream csv;
  write_points_csv(csv, ck.map);
  write_text(flags.out_dir / ("map_" + task + ".csv"), csv.str());
  std::ostringstream svg;
  write_map_svg(svg, ck.map);
  write_text(flags.out_dir / ("map_" + task + ".svg"), svg.str());

  out << "trained " << task << " model on " << train_idx.size() << " sequences, " << ck.map.size()
      << " clusters; final loss " << (log.empty() ? 0.0 : log.back().loss) << "\n";
  out << "checkpoint: " << ck_path.string() << "\n";
  return kExitOk;
}

int cmd_eval(const CommonFlags& flags, const std::optional<fs::path>& checkpoint, const std::string& mode_flag,
             bool timing, std::ostream& out) {
  Setup s = flags.resolve();
  const Dataset ds = load_dataset(s);
  const bool want_dp = mode_flag == "both" || mode_flag == "dp";
  const bool want_gsp = mode_flag == "both" || mode_flag == "gsp";
  if (!want_dp && !want_gsp) throw ConfigError("--mode must be dp, gsp or both");

  std::vector<FoldOutcome> dp_folds;
  std::vector<FoldOutcome> gsp_folds;
  std::optional<double> latency;
  if (checkpoint) {
    ModelCheckpoint ck = load_checkpoint(*checkpoint);
    if (flags.task && parse_task(*flags.task) != ck.task) {
      throw ConfigError("checkpoint was trained for task '" + std::string(to_string(ck.task)) + "', not '" +
                        *flags.task + "'");
    }
    s.run.train.task = ck.task;
    if (flags.coverage) ck.map.fit_regions(*flags.coverage);
    s.run.coverage = ck.map.clusters().front().coverage();
    std::vector<std::size_t> test_idx = all_indices(ds);
    std::uint32_t group = 0;
    if (s.fold) {
      test_idx = find_fold(loocv_splits(ds), *s.fold).test;
      group = *s.fold;
    }
    const EmbeddedSplit split = embed_split(ck.net, ds, ck.task, test_idx);
    dp_folds.push_back(evaluate_split(ck.map, split, VoteMode::decision_point, s.run.decision, group));
    gsp_folds.push_back(evaluate_split(ck.map, split, VoteMode::similarity_point, s.run.decision, group));
    if (timing) latency = measure_latency_ms(ck, ds, test_idx, s.run.decision);
  } else {
    const LoocvModels models = train_loocv(ds, s.run);
    dp_folds = evaluate_loocv(models, VoteMode::decision_point, s.run.decision);
    gsp_folds = evaluate_loocv(models, VoteMode::similarity_point, s.run.decision);
    for (std::size_t k = 0; k < models.models.size(); ++k) {
      const std::string name = "fold" + std::to_string(models.folds[k].test_group) + "_" +
                               std::string(to_string(s.run.train.task)) + ".ckpt";
      save_checkpoint(flags.out_dir / name, models.models[k]);
    }
    if (timing) latency = measure_latency_ms(models.models.front(), ds, models.folds.front().test, s.run.decision);
  }

  const Task task = s.run.train.task;
  const auto& cats = ds.categories(task);
  const EvalReport dp = summarize(context_for(s, ds, VoteMode::decision_point), cats, dp_folds);
  const EvalReport gsp = summarize(context_for(s, ds, VoteMode::similarity_point), cats, gsp_folds);
  write_reports(flags.out_dir, task, dp, gsp, out);
  if (!want_dp || !want_gsp) {
    out << "selected mode " << mode_flag << ": average " << format_percent((want_dp ? dp : gsp).average) << "\n";
  }
  if (latency) {
    nlohmann::ordered_json t;
    t["task"] = std::string(to_string(task));
    t["mean_frame_latency_ms"] = *latency;
    write_text(flags.out_dir / ("timing_" + std::string(to_string(task)) + ".json"), dump(t));
    out << "mean per-frame latency: " << *latency << " ms\n";
  }
  return kExitOk;
}

int cmd_ablate(const CommonFlags& flags, const std::optional<fs::path>& checkpoint, const std::string& coverage_list,
               std::ostream& out) {
  Setup s = flags.resolve();
  const std::vector<double> coverages = parse_coverages(coverage_list);
  const Dataset ds = load_dataset(s);
  std::vector<AblationRow> rows;

  auto sweep = [&](Task task, const std::vector<SimilarityMap>& maps, const std::vector<EmbeddedSplit>& splits,
                   const std::vector<std::uint32_t>& groups) {
    for (double q : coverages) {
      std::vector<FoldOutcome> folds;
      double unknown = 0.0;
      for (std::size_t k = 0; k < maps.size(); ++k) {
        SimilarityMap m = maps[k];
        m.fit_regions(q);
        folds.push_back(evaluate_split(m, splits[k], VoteMode::decision_point, s.run.decision, groups[k]));
        unknown += training_unknown_rate(m);
      }
      Setup at = s;
      at.run.train.task = task;
      at.run.coverage = q;
      const EvalReport r = summarize(context_for(at, ds, VoteMode::decision_point), ds.categories(task), folds);
      rows.push_back({task, q, r.average, unknown / static_cast<double>(maps.size())});
    }
  };

  if (checkpoint) {
    const ModelCheckpoint ck = load_checkpoint(*checkpoint);
    std::vector<std::size_t> test_idx = all_indices(ds);
    std::uint32_t group = 0;
    if (s.fold) {
      test_idx = find_fold(loocv_splits(ds), *s.fold).test;
      group = *s.fold;
    }
    sweep(ck.task, {ck.map}, {embed_split(ck.net, ds, ck.task, test_idx)}, {group});
  } else {
    for (Task task : {Task::shape, Task::weight}) {
      Setup t = s;
      t.run.train.task = task;
      const LoocvModels models = train_loocv(ds, t.run);
      std::vector<SimilarityMap> maps;
      std::vector<std::uint32_t> groups;
      for (std::size_t k = 0; k < models.models.size(); ++k) {
        maps.push_back(models.models[k].map);
        groups.push_back(models.folds[k].test_group);
      }
      sweep(task, maps, models.test_splits, groups);
    }
  }
  write_text(flags.out_dir / "ablation.json", dump(ablation_json(rows)));
  const std::string text = render_ablation(rows);
  write_text(flags.out_dir / "ablation.txt", text);
  out << text;
  return kExitOk;
}

std::vector<FeatureFrame> load_sequence(const fs::path& path, std::size_t dimension) {
  if (!fs::exists(path)) throw ConfigError("missing sequence: " + path.string());
  if (!fs::is_directory(path)) return read_feature_record(path);
  std::vector<fs::path> images;
  for (const auto& e : fs::directory_iterator(path)) {
    if (e.path().extension() == ".pgm") images.push_back(e.path());
  }
  std::sort(images.begin(), images.end());
  std::vector<FeatureFrame> frames;
  for (const auto& img : images) frames.push_back(image_to_frame(read_pgm(img), dimension));
  return frames;
}

int cmd_stream(const fs::path& checkpoint, const fs::path& sequence, const std::string& mode, const CommonFlags& flags,
               const std::optional<fs::path>& trace, std::ostream& out) {
  using clock = std::chrono::steady_clock;
  ModelCheckpoint ck = load_checkpoint(checkpoint);
  if (flags.coverage) ck.map.fit_regions(*flags.coverage);
  DecisionConfig decision;
  if (flags.threshold) decision.threshold = *flags.threshold;
  if (flags.min_frames) decision.min_frames = *flags.min_frames;
  const VoteMode vote_mode = parse_vote_mode(mode);
  const std::vector<FeatureFrame> frames = load_sequence(sequence, ck.net.input_dim());
  if (frames.empty()) throw InputError("sequence has no frames");

  DecisionState state(ck.map.size(), decision, vote_mode);
  double total_ms = 0.0;
  out << "frame  vote";
  for (const auto& c : ck.map.clusters()) out << "  " << c.label();
  out << "  unknown\n";
  for (const FeatureFrame& f : frames) {
    const auto t0 = clock::now();
    const GSPoint p = forward(ck.net, f);
    const auto event = state.push_frame(p, ck.map);
    total_ms += std::chrono::duration<double, std::milli>(clock::now() - t0).count();
    const ClusterId vote = state.votes().back();
    out << state.frame_count() << "  " << (vote ? ck.map.label(*vote) : std::string("unknown"));
    for (std::size_t l = 0; l < ck.map.size(); ++l) out << "  " << format_percent(state.tally().fraction(l));
    out << "  " << format_percent(state.tally().unknown_fraction()) << "\n";
    if (event) break;
  }
  if (trace) {
    std::ostringstream t;
    write_trace(t, state, ck.map);
    write_text(*trace, t.str());
  }
  const double latency = total_ms / static_cast<double>(state.frame_count());
  const ClusterId result = finalize(state);
  if (const auto& stop = state.stop_event()) {
    out << "stop at frame " << stop->frame << ": " << ck.map.label(stop->label) << " ("
        << format_percent(stop->fraction) << " of votes)\n";
  } else {
    out << "no early stop after " << state.frame_count() << " frames\n";
  }
  out << "prediction: " << (result ? ck.map.label(*result) : std::string("no known class")) << "\n";
  out << "mean per-frame latency: " << latency << " ms\n";
  return result ? kExitOk : kExitNoKnownClass;
}

int cmd_export_map(const fs::path& checkpoint, const fs::path& out_dir, std::size_t grid, std::ostream& out) {
  const ModelCheckpoint ck = load_checkpoint(checkpoint);
  std::ostringstream csv;
  write_points_csv(csv, ck.map);
  write_text(out_dir / "map.csv", csv.str());
  std::ostringstream svg;
  write_map_svg(svg, ck.map, grid);
  write_text(out_dir / "map.svg", svg.str());
  out << "wrote " << (out_dir / "map.csv").string() << " and " << (out_dir / "map.svg").string() << "\n";
  return kExitOk;
}

}  // namespace

Setup load_setup(const std::optional<fs::path>& config_file) {
  Setup s;
  if (!config_file) return s;
  std::ifstream in(*config_file);
  if (!in) throw ConfigError("cannot open config " + config_file->string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(config_file->string() + ": " + e.what() + " at byte offset " + std::to_string(e.byte));
  }
  try {
    reject_unknown(j, {"seed", "task", "dataset", "train", "coverage", "bandwidth", "threshold", "min_frames", "fold"},
                   "config");
    take(j, "seed", s.seed);
    s.run.train.seed = s.seed;
    if (j.contains("task")) s.run.train.task = parse_task(j.at("task").get<std::string>());
    take(j, "coverage", s.run.coverage);
    take(j, "bandwidth", s.run.bandwidth);
    take(j, "threshold", s.run.decision.threshold);
    take(j, "min_frames", s.run.decision.min_frames);
    if (j.contains("fold") && !j.at("fold").is_null()) s.fold = j.at("fold").get<std::uint32_t>();
    if (j.contains("train")) {
      const json& t = j.at("train");
      reject_unknown(t, {"iterations", "batch_size", "margin", "hidden", "lr", "decay", "step_size",
                         "iterations_per_epoch"},
                     "train");
      take(t, "iterations", s.run.train.iterations);
      take(t, "batch_size", s.run.train.batch_size);
      take(t, "margin", s.run.train.margin);
      take(t, "hidden", s.run.train.hidden_widths);
      take(t, "lr", s.run.train.schedule.base_lr);
      take(t, "decay", s.run.train.schedule.decay);
      take(t, "step_size", s.run.train.schedule.step_size);
      take(t, "iterations_per_epoch", s.run.train.iterations_per_epoch);
    }
    if (j.contains("dataset")) {
      const json& d = j.at("dataset");
      reject_unknown(d, {"manifest", "synthetic"}, "dataset");
      if (d.contains("manifest")) {
        fs::path m = d.at("manifest").get<std::string>();
        if (m.is_relative()) m = config_file->parent_path() / m;
        s.manifest = m;
      }
      if (d.contains("synthetic")) {
        const json& y = d.at("synthetic");
        reject_unknown(y, {"noise_factor", "class_gap", "start_share", "tier_gap", "dynamics_fraction",
                           "instance_spread", "video_noise", "frame_noise", "dynamics_noise", "videos_per_instance",
                           "frames_per_video", "dimension", "channel", "instance_tiers"},
                       "dataset.synthetic");
        take(y, "class_gap", s.synth.class_gap);
        take(y, "start_share", s.synth.start_share);
        take(y, "tier_gap", s.synth.tier_gap);
        take(y, "dynamics_fraction", s.synth.dynamics_fraction);
        take(y, "instance_spread", s.synth.instance_spread);
        take(y, "video_noise", s.synth.video_noise);
        take(y, "frame_noise", s.synth.frame_noise);
        take(y, "dynamics_noise", s.synth.dynamics_noise);
        take(y, "videos_per_instance", s.synth.videos_per_instance);
        take(y, "frames_per_video", s.synth.frames_per_video);
        take(y, "dimension", s.synth.dimension);
        take(y, "instance_tiers", s.synth.instance_tiers);
        if (y.contains("channel")) s.synth.channel = parse_channel(y.at("channel").get<std::string>());
        if (y.contains("noise_factor")) s.synth = s.synth.with_noise(y.at("noise_factor").get<double>());
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError(config_file->string() + ": " + e.what());
  }
  return s;
}

Dataset load_dataset(const Setup& setup) {
  if (setup.manifest) return ingest(*setup.manifest);
  return synth_generate(setup.synth, derive_seed(setup.seed, kSynthStream));
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"garnet: similarity-map garment classification with early stopping"};
  app.require_subcommand(1);

  CommonFlags synth_flags, train_flags, eval_flags, ablate_flags, stream_flags;
  std::optional<double> noise;
  auto* synth = app.add_subcommand("synth", "write a synthetic dataset (manifest + feature records)");
  synth_flags.attach(synth);
  synth->add_option("--noise", noise, "multiply every synthetic noise scale");

  auto* train_cmd = app.add_subcommand("train", "train one task model and fit its similarity map");
  train_flags.attach(train_cmd);

  std::optional<fs::path> eval_checkpoint;
  std::string eval_mode = "both";
  bool timing = false;
  auto* eval = app.add_subcommand("eval", "leave-one-group-out evaluation (or evaluate one checkpoint)");
  eval_flags.attach(eval);
  eval->add_option("--checkpoint", eval_checkpoint, "evaluate this checkpoint instead of training folds");
  eval->add_option("--mode", eval_mode, "dp, gsp or both");
  eval->add_flag("--timing", timing, "also measure per-frame latency (timing_<task>.json)");

  std::optional<fs::path> ablate_checkpoint;
  std::string coverage_list = "0.80,0.90,0.95,0.99";
  auto* ablate = app.add_subcommand("ablate", "sweep region coverage for both tasks");
  ablate_flags.attach(ablate);
  ablate->add_option("--checkpoint", ablate_checkpoint, "sweep a single checkpoint");
  ablate->add_option("--coverages", coverage_list, "comma-separated coverage values");

  fs::path stream_checkpoint;
  fs::path stream_sequence;
  std::string stream_mode = "dp";
  std::optional<fs::path> trace;
  auto* stream = app.add_subcommand("stream", "classify one sequence frame by frame");
  stream->add_option("--checkpoint", stream_checkpoint)->required();
  stream->add_option("--sequence", stream_sequence, "feature-record file or directory of .pgm frames")->required();
  stream->add_option("--mode", stream_mode, "dp or gsp");
  stream->add_option("--trace", trace, "write a per-frame CSV trace");
  stream->add_option("--coverage", stream_flags.coverage);
  stream->add_option("--threshold", stream_flags.threshold);
  stream->add_option("--min-frames", stream_flags.min_frames);

  fs::path map_checkpoint;
  fs::path map_out = "garnet-out";
  std::size_t grid = 256;
  auto* export_map = app.add_subcommand("export-map", "write the map as CSV points and an SVG plot");
  export_map->add_option("--checkpoint", map_checkpoint)->required();
  export_map->add_option("--out-dir", map_out);
  export_map->add_option("--grid", grid, "contour grid resolution");

  std::vector<std::string> argv_store{"garnet"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_store) argv.push_back(a.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitError;
  }

  try {
    if (synth->parsed()) return cmd_synth(synth_flags, noise, out);
    if (train_cmd->parsed()) return cmd_train(train_flags, out);
    if (eval->parsed()) return cmd_eval(eval_flags, eval_checkpoint, eval_mode, timing, out);
    if (ablate->parsed()) return cmd_ablate(ablate_flags, ablate_checkpoint, coverage_list, out);
    if (stream->parsed()) return cmd_stream(stream_checkpoint, stream_sequence, stream_mode, stream_flags, trace, out);
    if (export_map->parsed()) return cmd_export_map(map_checkpoint, map_out, grid, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}

}  // namespace garnet::cli
