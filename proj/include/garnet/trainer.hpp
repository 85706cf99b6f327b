#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "garnet/dataset.hpp"
#include "garnet/embedding.hpp"

namespace garnet {

// max(0, pp - np + margin). Throws InputError on a negative distance.
double triplet_loss(double pp, double np, double margin);

// Frames flattened out of a dataset with one label index per frame.
struct TrainingSet {
  std::vector<std::string> label_names;
  std::vector<const FeatureFrame*> frames;
  std::vector<std::size_t> labels;

  std::size_t size() const { return frames.size(); }
};

// All frames of the given sequences, labelled for `task`. The set borrows the
// dataset's frames.
TrainingSet make_training_set(const Dataset& dataset, Task task, std::span<const std::size_t> sequence_indices);

// Indices into a TrainingSet.
struct Triplet {
  std::size_t anchor = 0;
  std::size_t positive = 0;
  std::size_t negative = 0;
};

// Draws triplets uniformly over all valid (anchor, positive, negative) index
// choices: positive != anchor with the anchor's label, negative with any other
// label. Category c is picked with weight n_c (n_c - 1) (N - n_c), then the
// three members uniformly within it.
class TripletSampler {
 public:
  // Throws ConfigError unless some category has >= 2 frames and another
  // category is non-empty.
  explicit TripletSampler(const TrainingSet& set);

  Triplet sample(std::mt19937_64& rng) const;

 private:
  const TrainingSet* set_;
  std::vector<std::vector<std::size_t>> by_label_;
  std::vector<double> weights_;
};

Triplet sample_triplet(const TrainingSet& set, std::mt19937_64& rng);

struct TrainConfig {
  Task task = Task::shape;
  double margin = 1.0;
  std::uint64_t iterations = 20000;
  std::size_t batch_size = 32;
  std::uint64_t seed = 1;
  std::vector<std::size_t> hidden_widths{64, 32};
  StepSchedule schedule;
  AdamSettings adam;
  // Iterations per scheduler epoch; 0 means one pass over the training
  // frames, ceil(frames / batch_size).
  std::uint64_t iterations_per_epoch = 0;

  void validate() const;
};

struct TrainLogRecord {
  std::uint64_t step = 0;
  double lr = 0.0;
  double loss = 0.0;
  double active_fraction = 0.0;
};

struct TrainResult {
  Network net;
  OptimizerState optimizer;
  std::vector<TrainLogRecord> log;
  std::uint64_t iterations_per_epoch = 0;
};

// Batch triplet loss on a fresh graph; returns the loss node and fills
// `active` with the number of triplets whose hinge is open.
Var build_triplet_loss(Graph& graph, const Network& net, std::span<const Var> params, const TrainingSet& set,
                       std::span<const Triplet> batch, double margin, std::size_t* active = nullptr);

// Mean loss and active fraction of `net` over a fixed list of triplets.
struct TripletScore {
  double mean_loss = 0.0;
  double active_fraction = 0.0;
};
TripletScore score_triplets(const Network& net, const TrainingSet& set, std::span<const Triplet> triplets,
                            double margin);

// Trains from a network initialized from config.seed. Raises NumericError when
// the loss turns non-finite.
TrainResult train(const TrainConfig& config, const TrainingSet& set);

// One line per step: step,lr,loss,active_fraction.
void write_train_log(std::ostream& out, std::span<const TrainLogRecord> log);

}  // namespace garnet
