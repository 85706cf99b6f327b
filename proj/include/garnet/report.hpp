#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "garnet/decision.hpp"
#include "garnet/frame.hpp"
#include "garnet/pipeline.hpp"

namespace garnet {

struct CategoryScore {
  std::string label;
  std::size_t correct = 0;
  std::size_t total = 0;

  // correct / total, 0 for an empty category.
  double accuracy() const { return total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total); }
};

struct FoldReport {
  std::uint32_t test_group = 0;
  std::vector<CategoryScore> categories;
  double average = 0.0;
};

// Accuracy of one task under one vote mode, pooled over folds: each video is
// one prediction, a category's accuracy is correct videos over its videos and
// the average is the plain mean of category accuracies.
struct EvalReport {
  Task task = Task::shape;
  VoteMode mode = VoteMode::decision_point;
  Channel channel = Channel::depth;
  double coverage = 0.95;
  double bandwidth = 0.0;
  DecisionConfig decision;
  std::vector<CategoryScore> categories;
  double average = 0.0;
  std::vector<FoldReport> folds;
  double mean_stop_frame = 0.0;  // frames observed before deciding, averaged over videos
  double early_stop_rate = 0.0;
  double unknown_rate = 0.0;
};

struct ReportContext {
  Task task = Task::shape;
  VoteMode mode = VoteMode::decision_point;
  Channel channel = Channel::depth;
  double coverage = 0.95;
  double bandwidth = 0.0;
  DecisionConfig decision;
};

EvalReport summarize(const ReportContext& context, const std::vector<std::string>& categories,
                     const std::vector<FoldOutcome>& folds);

// Mean of per-category accuracies over non-empty categories.
double mean_accuracy(const std::vector<CategoryScore>& categories);

struct ReferenceRow {
  std::string_view method;
  double accuracy_percent;
};

// Published shape-classification accuracies for context; never computed.
inline constexpr std::array<ReferenceRow, 5> kReferenceRows{{
    {"CNN-LSTM (classification)", 48.0},
    {"Interactive Perception", 64.2},
    {"Single-shot category recognition", 67.0},
    {"Continuous Perception (prior)", 70.8},
    {"GarNet (Continuous Perception)", 92.0},
}};

nlohmann::ordered_json to_json(const EvalReport& report);
nlohmann::ordered_json reference_rows_json();

// Category rows with one "<channel>, DP" and one "<channel>, GSP" column,
// followed by per-fold averages and the run settings.
std::string render_table(const EvalReport& dp, const EvalReport& gsp);
std::string render_reference_rows();

struct AblationRow {
  Task task = Task::shape;
  double coverage = 0.0;
  double accuracy = 0.0;               // DP-mode LOOCV average
  double training_unknown_rate = 0.0;  // own training points outside every region
};

nlohmann::ordered_json ablation_json(const std::vector<AblationRow>& rows);
std::string render_ablation(const std::vector<AblationRow>& rows);

std::string format_percent(double fraction);

}  // namespace garnet
