#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "garnet/embedding.hpp"
#include "garnet/similarity_map.hpp"

namespace garnet {

struct DecisionConfig {
  // A label stops the sequence once its vote fraction is >= threshold.
  double threshold = 0.8;
  // No stop before this many frames have been observed.
  std::size_t min_frames = 5;
};

// What each frame's vote is cast on: the running-mean decision point, or the
// frame's own embedding (ablation arm).
enum class VoteMode { decision_point, similarity_point };

std::string_view to_string(VoteMode mode);
VoteMode parse_vote_mode(std::string_view text);

struct StopEvent {
  std::size_t frame = 0;  // number of frames observed when the rule fired (1-based)
  std::size_t label = 0;
  double fraction = 0.0;

  friend bool operator==(const StopEvent&, const StopEvent&) = default;
};

// Per-label vote counts; unknown votes count toward the denominator.
class VoteTally {
 public:
  explicit VoteTally(std::size_t label_count) : counts_(label_count, 0) {}

  void add(ClusterId vote);
  std::size_t total() const { return total_; }
  std::size_t count(std::size_t label) const { return counts_.at(label); }
  std::size_t unknown() const { return unknown_; }
  std::size_t label_count() const { return counts_.size(); }
  double fraction(std::size_t label) const;
  double unknown_fraction() const;

  // Label with the most votes whose fraction is >= threshold. Ties go to the
  // lower label index.
  std::optional<std::size_t> leader(double threshold) const;

 private:
  std::vector<std::size_t> counts_;
  std::size_t unknown_ = 0;
  std::size_t total_ = 0;
};

// Streaming accumulator for one sequence.
class DecisionState {
 public:
  DecisionState(std::size_t label_count, DecisionConfig config = {}, VoteMode mode = VoteMode::decision_point);

  // Adds one embedded frame: updates the running mean, classifies the decision
  // point (or the raw point in similarity_point mode) and votes. Returns a
  // StopEvent whenever the stop rule holds after this frame; the first one is
  // also kept in stop_event().
  std::optional<StopEvent> push_frame(GSPoint p, const SimilarityMap& map);

  std::size_t frame_count() const { return gsps_.size(); }
  const std::vector<GSPoint>& similarity_points() const { return gsps_; }
  const std::vector<GSPoint>& decision_points() const { return dps_; }
  const std::vector<ClusterId>& votes() const { return votes_; }
  const VoteTally& tally() const { return tally_; }
  const DecisionConfig& config() const { return config_; }
  VoteMode mode() const { return mode_; }
  const std::optional<StopEvent>& stop_event() const { return stop_; }

 private:
  DecisionConfig config_;
  VoteMode mode_;
  double sum_x_ = 0.0;
  double sum_y_ = 0.0;
  std::vector<GSPoint> gsps_;
  std::vector<GSPoint> dps_;
  std::vector<ClusterId> votes_;
  VoteTally tally_;
  std::optional<StopEvent> stop_;
};

// Stop label if the rule fired, else the label holding >= threshold of all
// votes, else unknown. Throws InputError when no frame was pushed.
ClusterId finalize(const DecisionState& state);

// First frame (1-based) at which a vote trace satisfies the stop rule.
std::optional<StopEvent> first_stop(std::span<const ClusterId> votes, std::size_t label_count,
                                    const DecisionConfig& config);

struct SequenceResult {
  ClusterId prediction;
  std::optional<StopEvent> stop;
  DecisionState state;
};

// Runs the streaming rule over already-embedded points, halting at the first
// stop event.
SequenceResult evaluate_points(const SimilarityMap& map, std::span<const GSPoint> points, VoteMode mode,
                               const DecisionConfig& config = {});

// Embeds each frame with `net` as it arrives and runs the streaming rule.
SequenceResult evaluate_sequence(const Network& net, const SimilarityMap& map,
                                 std::span<const FeatureFrame> frames, VoteMode mode,
                                 const DecisionConfig& config = {});

// Comma-separated per-frame trace: frame, gsp_x, gsp_y, dp_x, dp_y, vote, then
// the cumulative vote fraction of every label and of unknown.
void write_trace(std::ostream& out, const DecisionState& state, const SimilarityMap& map);

}  // namespace garnet
