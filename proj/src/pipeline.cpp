#include "garnet/pipeline.hpp"

#include <array>
#include <random>

#include "garnet/errors.hpp"

namespace garnet {

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  const std::array<std::uint32_t, 6> words{
      static_cast<std::uint32_t>(seed),   static_cast<std::uint32_t>(seed >> 32),
      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
      static_cast<std::uint32_t>(index),  static_cast<std::uint32_t>(index >> 32)};
  std::seed_seq seq(words.begin(), words.end());
  std::array<std::uint32_t, 2> out{};
  seq.generate(out.begin(), out.end());
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

void RunConfig::validate() const {
  train.validate();
  if (!(coverage > 0.0 && coverage <= 1.0)) throw ConfigError("coverage must lie in (0, 1]");
  if (!std::isfinite(bandwidth)) throw ConfigError("bandwidth must be finite");
  if (!(decision.threshold > 0.0 && decision.threshold <= 1.0)) throw ConfigError("threshold must lie in (0, 1]");
}

std::vector<GSPoint> embed_frames(const Network& net, std::span<const FeatureFrame> frames) {
  std::vector<GSPoint> out;
  out.reserve(frames.size());
  for (const auto& f : frames) out.push_back(forward(net, f));
  return out;
}

SimilarityMap fit_similarity_map(const Network& net, const Dataset& dataset, Task task,
                                 std::span<const std::size_t> train_indices, double coverage, double bandwidth) {
  std::vector<GSPoint> points;
  std::vector<std::size_t> labels;
  for (std::size_t idx : train_indices) {
    const auto& seq = dataset.sequences.at(idx);
    const std::size_t label = dataset.label_index(seq, task);
    for (const auto& f : seq.frames) {
      points.push_back(forward(net, f));
      labels.push_back(label);
    }
  }
  return build_map(task, dataset.categories(task), points, labels, coverage, bandwidth);
}

ModelCheckpoint fit_model(const Dataset& dataset, std::span<const std::size_t> train_indices, const RunConfig& config,
                          std::vector<TrainLogRecord>* log) {
  config.validate();
  const TrainingSet set = make_training_set(dataset, config.train.task, train_indices);
  TrainResult trained = train(config.train, set);

  ModelCheckpoint ck;
  ck.task = config.train.task;
  ck.adam = trained.optimizer.adam;
  ck.schedule = trained.optimizer.schedule;
  ck.optimizer_step = trained.optimizer.step;
  ck.iterations_per_epoch = trained.iterations_per_epoch;
  ck.margin = config.train.margin;
  ck.seed = config.train.seed;
  ck.iterations = config.train.iterations;
  ck.batch_size = config.train.batch_size;
  ck.map = fit_similarity_map(trained.net, dataset, ck.task, train_indices, config.coverage, config.bandwidth);
  ck.net = std::move(trained.net);
  if (log) *log = std::move(trained.log);
  return ck;
}

EmbeddedSplit embed_split(const Network& net, const Dataset& dataset, Task task, std::span<const std::size_t> indices) {
  EmbeddedSplit split;
  for (std::size_t idx : indices) {
    const auto& seq = dataset.sequences.at(idx);
    split.sequences.push_back(idx);
    split.truths.push_back(dataset.label_index(seq, task));
    split.points.push_back(embed_frames(net, seq.frames));
  }
  return split;
}

FoldOutcome evaluate_split(const SimilarityMap& map, const EmbeddedSplit& split, VoteMode mode,
                           const DecisionConfig& decision, std::uint32_t test_group) {
  FoldOutcome fold;
  fold.test_group = test_group;
  for (std::size_t i = 0; i < split.points.size(); ++i) {
    const SequenceResult r = evaluate_points(map, split.points[i], mode, decision);
    SequenceOutcome o;
    o.sequence = split.sequences[i];
    o.truth = split.truths[i];
    o.predicted = r.prediction;
    if (r.stop) o.stop_frame = r.stop->frame;
    o.frames_used = r.state.frame_count();
    fold.outcomes.push_back(o);
  }
  return fold;
}

LoocvModels train_loocv(const Dataset& dataset, const RunConfig& config) {
  LoocvModels out;
  out.folds = loocv_splits(dataset);
  for (std::size_t k = 0; k < out.folds.size(); ++k) {
    RunConfig fold_config = config;
    fold_config.train.seed = derive_seed(config.train.seed, kTrainStream, k);
    out.models.push_back(fit_model(dataset, out.folds[k].train, fold_config));
    out.test_splits.push_back(embed_split(out.models.back().net, dataset, config.train.task, out.folds[k].test));
  }
  return out;
}

std::vector<FoldOutcome> evaluate_loocv(const LoocvModels& models, VoteMode mode, const DecisionConfig& decision) {
  std::vector<FoldOutcome> out;
  for (std::size_t k = 0; k < models.folds.size(); ++k) {
    out.push_back(evaluate_split(models.models[k].map, models.test_splits[k], mode, decision, models.folds[k].test_group));
  }
  return out;
}

double training_unknown_rate(const SimilarityMap& map) {
  std::size_t unknown = 0;
  std::size_t total = 0;
  for (const auto& c : map.clusters()) {
    for (const GSPoint& p : c.points()) {
      unknown += classify_point(map, p) ? 0 : 1;
      ++total;
    }
  }
  return total == 0 ? 0.0 : static_cast<double>(unknown) / static_cast<double>(total);
}

}  // namespace garnet
