#include "garnet/trainer.hpp"

#include <cmath>
#include <ostream>

#include "garnet/errors.hpp"

namespace garnet {

double triplet_loss(double pp, double np, double margin) {
  if (pp < 0.0 || np < 0.0) throw InputError("triplet_loss: distances must be non-negative");
  return std::max(0.0, pp - np + margin);
}

TrainingSet make_training_set(const Dataset& dataset, Task task, std::span<const std::size_t> sequence_indices) {
  TrainingSet set;
  set.label_names = dataset.categories(task);
  for (std::size_t idx : sequence_indices) {
    const auto& seq = dataset.sequences.at(idx);
    const std::size_t label = dataset.label_index(seq, task);
    for (const auto& frame : seq.frames) {
      set.frames.push_back(&frame);
      set.labels.push_back(label);
    }
  }
  return set;
}

TripletSampler::TripletSampler(const TrainingSet& set) : set_(&set), by_label_(set.label_names.size()) {
  for (std::size_t i = 0; i < set.size(); ++i) by_label_.at(set.labels[i]).push_back(i);
  const double total = static_cast<double>(set.size());
  bool any = false;
  for (const auto& members : by_label_) {
    const double n = static_cast<double>(members.size());
    const double w = n * (n - 1.0) * (total - n);
    weights_.push_back(std::max(0.0, w));
    any = any || w > 0.0;
  }
  if (!any) throw ConfigError("triplet sampling needs two categories, one of them with at least two frames");
}

Triplet TripletSampler::sample(std::mt19937_64& rng) const {
  std::discrete_distribution<std::size_t> pick_label(weights_.begin(), weights_.end());
  const std::size_t label = pick_label(rng);
  const auto& same = by_label_[label];
  const std::size_t n_other = set_->size() - same.size();

  std::uniform_int_distribution<std::size_t> pick_anchor(0, same.size() - 1);
  const std::size_t a = pick_anchor(rng);
  std::uniform_int_distribution<std::size_t> pick_positive(0, same.size() - 2);
  std::size_t p = pick_positive(rng);
  if (p >= a) ++p;

  // Negative: uniform over the frames of every other label, by position in
  // the concatenation of the other buckets.
  std::uniform_int_distribution<std::size_t> pick_negative(0, n_other - 1);
  std::size_t k = pick_negative(rng);
  std::size_t negative = 0;
  for (std::size_t l = 0; l < by_label_.size(); ++l) {
    if (l == label) continue;
    if (k < by_label_[l].size()) {
      negative = by_label_[l][k];
      break;
    }
    k -= by_label_[l].size();
  }
  return Triplet{same[a], same[p], negative};
}

Triplet sample_triplet(const TrainingSet& set, std::mt19937_64& rng) { return TripletSampler(set).sample(rng); }

void TrainConfig::validate() const {
  if (!(margin >= 0.0) || !std::isfinite(margin)) throw ConfigError("margin must be finite and >= 0");
  if (iterations == 0) throw ConfigError("iterations must be positive");
  if (batch_size == 0) throw ConfigError("batch size must be positive");
  if (!(schedule.base_lr > 0.0)) throw ConfigError("learning rate must be positive");
  if (!(schedule.decay > 0.0)) throw ConfigError("decay must be positive");
  if (schedule.step_size == 0) throw ConfigError("scheduler step size must be positive");
}

Var build_triplet_loss(Graph& graph, const Network& net, std::span<const Var> params, const TrainingSet& set,
                       std::span<const Triplet> batch, double margin, std::size_t* active) {
  std::vector<const FeatureFrame*> anchors;
  std::vector<const FeatureFrame*> positives;
  std::vector<const FeatureFrame*> negatives;
  for (const Triplet& t : batch) {
    anchors.push_back(set.frames.at(t.anchor));
    positives.push_back(set.frames.at(t.positive));
    negatives.push_back(set.frames.at(t.negative));
  }
  const Var pa = forward(graph, net, params, graph.constant(stack_frames(anchors)));
  const Var pp = forward(graph, net, params, graph.constant(stack_frames(positives)));
  const Var pn = forward(graph, net, params, graph.constant(stack_frames(negatives)));
  const Var dpos = graph.row_norm(graph.sub(pp, pa));
  const Var dneg = graph.row_norm(graph.sub(pn, pa));
  const Var hinge = graph.add_scalar(graph.sub(dpos, dneg), margin);
  if (active) {
    const Matrix& h = graph.value(hinge);
    *active = static_cast<std::size_t>((h.array() > 0.0).count());
  }
  return graph.mean(graph.relu(hinge));
}

TripletScore score_triplets(const Network& net, const TrainingSet& set, std::span<const Triplet> triplets,
                            double margin) {
  if (triplets.empty()) return {};
  double loss = 0.0;
  std::size_t active = 0;
  for (const Triplet& t : triplets) {
    const GSPoint a = forward(net, *set.frames.at(t.anchor));
    const GSPoint p = forward(net, *set.frames.at(t.positive));
    const GSPoint n = forward(net, *set.frames.at(t.negative));
    const double l = triplet_loss(std::hypot(p.x - a.x, p.y - a.y), std::hypot(n.x - a.x, n.y - a.y), margin);
    loss += l;
    active += l > 0.0 ? 1 : 0;
  }
  const double count = static_cast<double>(triplets.size());
  return {loss / count, static_cast<double>(active) / count};
}

TrainResult train(const TrainConfig& config, const TrainingSet& set) {
  config.validate();
  if (set.size() == 0) throw ConfigError("empty training set");
  const TripletSampler sampler(set);

  std::mt19937_64 rng(config.seed);
  TrainResult result;
  result.net = Network(set.frames.front()->dimension(), config.hidden_widths, rng());
  result.optimizer = OptimizerState(result.net.parameters(), config.adam, config.schedule);
  result.iterations_per_epoch = config.iterations_per_epoch
                                    ? config.iterations_per_epoch
                                    : (set.size() + config.batch_size - 1) / config.batch_size;
  result.log.reserve(config.iterations);

  std::vector<Triplet> batch(config.batch_size);
  for (std::uint64_t step = 0; step < config.iterations; ++step) {
    for (Triplet& t : batch) t = sampler.sample(rng);
    Graph graph;
    const std::vector<Var> params = bind_parameters(graph, result.net);
    std::size_t active = 0;
    const Var loss = build_triplet_loss(graph, result.net, params, set, batch, config.margin, &active);
    const double loss_value = graph.value(loss)(0, 0);
    if (!std::isfinite(loss_value)) {
      throw NumericError("non-finite triplet loss at step " + std::to_string(step));
    }
    const Gradients grads = backward(graph, params, loss);
    const double lr = scheduler_step(result.optimizer, step / result.iterations_per_epoch);
    adam_step(result.optimizer, result.net.parameters(), grads, lr);
    result.log.push_back(
        {step, lr, loss_value, static_cast<double>(active) / static_cast<double>(config.batch_size)});
  }
  return result;
}

void write_train_log(std::ostream& out, std::span<const TrainLogRecord> log) {
  const auto prec = out.precision(17);
  out << "step,lr,loss,active_fraction\n";
  for (const auto& r : log) out << r.step << ',' << r.lr << ',' << r.loss << ',' << r.active_fraction << '\n';
  out.precision(prec);
}

}  // namespace garnet
