#include "garnet/report.hpp"

#include <iomanip>
#include <sstream>

namespace garnet {

std::string format_percent(double fraction) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(2) << fraction * 100.0 << '%';
  return out.str();
}

double mean_accuracy(const std::vector<CategoryScore>& categories) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& c : categories) {
    if (c.total == 0) continue;
    sum += c.accuracy();
    ++n;
  }
  return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

EvalReport summarize(const ReportContext& context, const std::vector<std::string>& categories,
                     const std::vector<FoldOutcome>& folds) {
  EvalReport report;
  report.task = context.task;
  report.mode = context.mode;
  report.channel = context.channel;
  report.coverage = context.coverage;
  report.bandwidth = context.bandwidth;
  report.decision = context.decision;
  for (const auto& name : categories) report.categories.push_back({name, 0, 0});

  std::size_t videos = 0;
  std::size_t stopped = 0;
  std::size_t unknown = 0;
  double frames = 0.0;
  for (const FoldOutcome& fold : folds) {
    FoldReport fr;
    fr.test_group = fold.test_group;
    for (const auto& name : categories) fr.categories.push_back({name, 0, 0});
    for (const SequenceOutcome& o : fold.outcomes) {
      for (auto* scores : {&fr.categories, &report.categories}) {
        (*scores)[o.truth].total += 1;
        (*scores)[o.truth].correct += o.correct() ? 1 : 0;
      }
      ++videos;
      stopped += o.stop_frame ? 1 : 0;
      unknown += o.predicted ? 0 : 1;
      frames += static_cast<double>(o.frames_used);
    }
    fr.average = mean_accuracy(fr.categories);
    report.folds.push_back(std::move(fr));
  }
  report.average = mean_accuracy(report.categories);
  if (videos > 0) {
    const double n = static_cast<double>(videos);
    report.mean_stop_frame = frames / n;
    report.early_stop_rate = static_cast<double>(stopped) / n;
    report.unknown_rate = static_cast<double>(unknown) / n;
  }
  return report;
}

namespace {

nlohmann::ordered_json categories_json(const std::vector<CategoryScore>& categories) {
  nlohmann::ordered_json out = nlohmann::ordered_json::array();
  for (const auto& c : categories) {
    out.push_back({{"label", c.label}, {"correct", c.correct}, {"total", c.total}, {"accuracy", c.accuracy()}});
  }
  return out;
}

std::string pad(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : s + std::string(width - s.size(), ' ');
}

}  // namespace

nlohmann::ordered_json to_json(const EvalReport& r) {
  nlohmann::ordered_json j;
  j["task"] = std::string(to_string(r.task));
  j["mode"] = std::string(to_string(r.mode));
  j["channel"] = std::string(to_string(r.channel));
  j["coverage"] = r.coverage;
  j["bandwidth"] = r.bandwidth > 0.0 ? nlohmann::ordered_json(r.bandwidth) : nlohmann::ordered_json("scott");
  j["threshold"] = r.decision.threshold;
  j["min_frames"] = r.decision.min_frames;
  j["categories"] = categories_json(r.categories);
  j["average"] = r.average;
  nlohmann::ordered_json folds = nlohmann::ordered_json::array();
  for (const auto& f : r.folds) {
    folds.push_back({{"test_group", f.test_group}, {"categories", categories_json(f.categories)}, {"average", f.average}});
  }
  j["folds"] = folds;
  j["mean_stop_frame"] = r.mean_stop_frame;
  j["early_stop_rate"] = r.early_stop_rate;
  j["unknown_rate"] = r.unknown_rate;
  return j;
}

nlohmann::ordered_json reference_rows_json() {
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const auto& row : kReferenceRows) {
    rows.push_back({{"method", std::string(row.method)}, {"accuracy_percent", row.accuracy_percent}});
  }
  return rows;
}

std::string render_table(const EvalReport& dp, const EvalReport& gsp) {
  const std::string channel(to_string(dp.channel));
  const std::string col_dp = channel + ", DP";
  const std::string col_gsp = channel + ", GSP";
  std::size_t width = 10;
  for (const auto& c : dp.categories) width = std::max(width, c.label.size() + 2);

  std::ostringstream out;
  out << "Prediction results (" << to_string(dp.task) << ")\n";
  out << pad("Category", width) << " | " << pad(col_dp, 12) << " | " << col_gsp << "\n";
  out << std::string(width, '-') << "-+-" << std::string(12, '-') << "-+-" << std::string(12, '-') << "\n";
  for (std::size_t i = 0; i < dp.categories.size(); ++i) {
    out << pad(dp.categories[i].label, width) << " | " << pad(format_percent(dp.categories[i].accuracy()), 12)
        << " | " << format_percent(gsp.categories[i].accuracy()) << "\n";
  }
  out << pad("Average", width) << " | " << pad(format_percent(dp.average), 12) << " | "
      << format_percent(gsp.average) << "\n\n";

  out << "Per-fold average\n";
  for (std::size_t k = 0; k < dp.folds.size(); ++k) {
    out << pad("group " + std::to_string(dp.folds[k].test_group), width) << " | "
        << pad(format_percent(dp.folds[k].average), 12) << " | " << format_percent(gsp.folds[k].average) << "\n";
  }
  out << "\n";
  out << std::fixed << std::setprecision(2);
  out << "mean frames observed: DP " << dp.mean_stop_frame << ", GSP " << gsp.mean_stop_frame << "\n";
  out << "early-stop rate:      DP " << format_percent(dp.early_stop_rate) << ", GSP "
      << format_percent(gsp.early_stop_rate) << "\n";
  out << "no-known-class rate:  DP " << format_percent(dp.unknown_rate) << ", GSP "
      << format_percent(gsp.unknown_rate) << "\n";
  out << "coverage " << format_percent(dp.coverage) << ", threshold " << format_percent(dp.decision.threshold)
      << ", min frames " << dp.decision.min_frames << ", bandwidth "
      << (dp.bandwidth > 0.0 ? std::to_string(dp.bandwidth) : std::string("scott")) << "\n";
  return out.str();
}

std::string render_reference_rows() {
  std::ostringstream out;
  out << "Reference: published shape accuracy (not computed here)\n";
  for (const auto& row : kReferenceRows) {
    out << pad(std::string(row.method), 36) << " | " << std::fixed << std::setprecision(1) << row.accuracy_percent
        << "%\n";
  }
  return out.str();
}

nlohmann::ordered_json ablation_json(const std::vector<AblationRow>& rows) {
  nlohmann::ordered_json out = nlohmann::ordered_json::array();
  for (const auto& r : rows) {
    out.push_back({{"task", std::string(to_string(r.task))},
                   {"coverage", r.coverage},
                   {"accuracy", r.accuracy},
                   {"training_unknown_rate", r.training_unknown_rate}});
  }
  return out;
}

std::string render_ablation(const std::vector<AblationRow>& rows) {
  std::ostringstream out;
  out << "Coverage ablation (DP mode)\n";
  out << pad("task", 8) << " | " << pad("coverage", 9) << " | " << pad("accuracy", 9) << " | train unknown\n";
  for (const auto& r : rows) {
    out << pad(std::string(to_string(r.task)), 8) << " | " << pad(format_percent(r.coverage), 9) << " | "
        << pad(format_percent(r.accuracy), 9) << " | " << format_percent(r.training_unknown_rate) << "\n";
  }
  return out.str();
}

}  // namespace garnet
