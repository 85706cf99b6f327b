#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "garnet/checkpoint.hpp"
#include "garnet/dataset.hpp"
#include "garnet/decision.hpp"
#include "garnet/trainer.hpp"

namespace garnet {

// Deterministic child seed for an independent random stream. Every random
// choice in a run is derived from the single user-facing seed this way.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index = 0);

// Stream tags for derive_seed.
enum SeedStream : std::uint64_t { kSynthStream = 1, kTrainStream = 2 };

struct RunConfig {
  TrainConfig train;
  double coverage = 0.95;
  double bandwidth = 0.0;  // <= 0 selects Scott's rule per cluster
  DecisionConfig decision;

  void validate() const;
};

std::vector<GSPoint> embed_frames(const Network& net, std::span<const FeatureFrame> frames);

// Map of every training frame's embedding, one cluster per category of `task`.
SimilarityMap fit_similarity_map(const Network& net, const Dataset& dataset, Task task,
                                 std::span<const std::size_t> train_indices, double coverage, double bandwidth);

// Trains on the given sequences and fits the map from the same sequences.
ModelCheckpoint fit_model(const Dataset& dataset, std::span<const std::size_t> train_indices, const RunConfig& config,
                          std::vector<TrainLogRecord>* log = nullptr);

struct SequenceOutcome {
  std::size_t sequence = 0;  // index into Dataset::sequences
  std::size_t truth = 0;
  ClusterId predicted;
  std::optional<std::size_t> stop_frame;
  std::size_t frames_used = 0;

  bool correct() const { return predicted && *predicted == truth; }
};

struct FoldOutcome {
  std::uint32_t test_group = 0;
  std::vector<SequenceOutcome> outcomes;
};

// Test sequences of one fold, embedded once and reusable across modes and
// coverage settings.
struct EmbeddedSplit {
  std::vector<std::size_t> sequences;
  std::vector<std::size_t> truths;
  std::vector<std::vector<GSPoint>> points;
};

EmbeddedSplit embed_split(const Network& net, const Dataset& dataset, Task task, std::span<const std::size_t> indices);

FoldOutcome evaluate_split(const SimilarityMap& map, const EmbeddedSplit& split, VoteMode mode,
                           const DecisionConfig& decision, std::uint32_t test_group = 0);

// One trained model per leave-one-group-out fold.
struct LoocvModels {
  std::vector<Fold> folds;
  std::vector<ModelCheckpoint> models;
  std::vector<EmbeddedSplit> test_splits;
};

// Trains fold k with seed derive_seed(config.train.seed, kTrainStream, k).
LoocvModels train_loocv(const Dataset& dataset, const RunConfig& config);

std::vector<FoldOutcome> evaluate_loocv(const LoocvModels& models, VoteMode mode, const DecisionConfig& decision);

// Fraction of a map's own training points that no region claims.
double training_unknown_rate(const SimilarityMap& map);

}  // namespace garnet
