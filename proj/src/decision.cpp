#include "garnet/decision.hpp"

#include <ostream>
#include <string>

#include "garnet/errors.hpp"

namespace garnet {

std::string_view to_string(VoteMode mode) { return mode == VoteMode::decision_point ? "dp" : "gsp"; }

VoteMode parse_vote_mode(std::string_view text) {
  if (text == "dp") return VoteMode::decision_point;
  if (text == "gsp") return VoteMode::similarity_point;
  throw ConfigError("unknown mode '" + std::string(text) + "' (expected dp or gsp)");
}

void VoteTally::add(ClusterId vote) {
  if (vote) {
    counts_.at(*vote) += 1;
  } else {
    unknown_ += 1;
  }
  total_ += 1;
}

double VoteTally::fraction(std::size_t label) const {
  return total_ == 0 ? 0.0 : static_cast<double>(counts_.at(label)) / static_cast<double>(total_);
}

double VoteTally::unknown_fraction() const {
  return total_ == 0 ? 0.0 : static_cast<double>(unknown_) / static_cast<double>(total_);
}

std::optional<std::size_t> VoteTally::leader(double threshold) const {
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < counts_.size(); ++i) {
    if (counts_[i] == 0 || fraction(i) < threshold) continue;
    if (!best || counts_[i] > counts_[*best]) best = i;
  }
  return best;
}

DecisionState::DecisionState(std::size_t label_count, DecisionConfig config, VoteMode mode)
    : config_(config), mode_(mode), tally_(label_count) {}

std::optional<StopEvent> DecisionState::push_frame(GSPoint p, const SimilarityMap& map) {
  if (map.size() != tally_.label_count()) throw InputError("decision state and map disagree on label count");
  sum_x_ += p.x;
  sum_y_ += p.y;
  gsps_.push_back(p);
  const double n = static_cast<double>(gsps_.size());
  dps_.push_back({sum_x_ / n, sum_y_ / n});

  const ClusterId vote = classify_point(map, mode_ == VoteMode::decision_point ? dps_.back() : p);
  votes_.push_back(vote);
  tally_.add(vote);

  if (gsps_.size() < config_.min_frames) return std::nullopt;
  const auto winner = tally_.leader(config_.threshold);
  if (!winner) return std::nullopt;
  StopEvent event{gsps_.size(), *winner, tally_.fraction(*winner)};
  if (!stop_) stop_ = event;
  return event;
}

ClusterId finalize(const DecisionState& state) {
  if (state.frame_count() == 0) throw InputError("finalize: no frames observed");
  if (state.stop_event()) return state.stop_event()->label;
  return state.tally().leader(state.config().threshold);
}

std::optional<StopEvent> first_stop(std::span<const ClusterId> votes, std::size_t label_count,
                                    const DecisionConfig& config) {
  VoteTally tally(label_count);
  for (ClusterId v : votes) {
    tally.add(v);
    if (tally.total() < config.min_frames) continue;
    if (const auto winner = tally.leader(config.threshold)) {
      return StopEvent{tally.total(), *winner, tally.fraction(*winner)};
    }
  }
  return std::nullopt;
}

SequenceResult evaluate_points(const SimilarityMap& map, std::span<const GSPoint> points, VoteMode mode,
                               const DecisionConfig& config) {
  if (points.empty()) throw InputError("evaluate: empty sequence");
  DecisionState state(map.size(), config, mode);
  for (const GSPoint& p : points) {
    if (state.push_frame(p, map)) break;
  }
  ClusterId prediction = finalize(state);
  std::optional<StopEvent> stop = state.stop_event();
  return SequenceResult{prediction, stop, std::move(state)};
}

SequenceResult evaluate_sequence(const Network& net, const SimilarityMap& map,
                                 std::span<const FeatureFrame> frames, VoteMode mode,
                                 const DecisionConfig& config) {
  if (frames.empty()) throw InputError("evaluate: empty sequence");
  DecisionState state(map.size(), config, mode);
  for (const FeatureFrame& f : frames) {
    if (state.push_frame(forward(net, f), map)) break;
  }
  ClusterId prediction = finalize(state);
  std::optional<StopEvent> stop = state.stop_event();
  return SequenceResult{prediction, stop, std::move(state)};
}

void write_trace(std::ostream& out, const DecisionState& state, const SimilarityMap& map) {
  out << "frame,gsp_x,gsp_y,dp_x,dp_y,vote";
  for (const auto& c : map.clusters()) out << ",frac_" << c.label();
  out << ",frac_unknown\n";
  const auto prec = out.precision(17);
  VoteTally running(map.size());
  for (std::size_t i = 0; i < state.frame_count(); ++i) {
    const ClusterId vote = state.votes()[i];
    running.add(vote);
    const GSPoint g = state.similarity_points()[i];
    const GSPoint d = state.decision_points()[i];
    out << (i + 1) << ',' << g.x << ',' << g.y << ',' << d.x << ',' << d.y << ','
        << (vote ? map.label(*vote) : std::string("unknown"));
    for (std::size_t l = 0; l < map.size(); ++l) out << ',' << running.fraction(l);
    out << ',' << running.unknown_fraction() << '\n';
  }
  out.precision(prec);
}

}  // namespace garnet
