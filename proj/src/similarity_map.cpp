#include "garnet/similarity_map.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <set>
#include <utility>

#include "garnet/errors.hpp"

namespace garnet {

double gsd(GSPoint a, GSPoint b) { return std::hypot(a.x - b.x, a.y - b.y); }

GSPoint centroid(std::span<const GSPoint> points) {
  if (points.empty()) throw InputError("centroid of an empty point list");
  double sx = 0.0;
  double sy = 0.0;
  for (const GSPoint& p : points) {
    sx += p.x;
    sy += p.y;
  }
  const double m = static_cast<double>(points.size());
  return {sx / m, sy / m};
}

double scott_bandwidth(std::span<const GSPoint> points) {
  if (points.size() < 2) return kMinBandwidth;
  const GSPoint mean = centroid(points);
  double vx = 0.0;
  double vy = 0.0;
  for (const GSPoint& p : points) {
    vx += (p.x - mean.x) * (p.x - mean.x);
    vy += (p.y - mean.y) * (p.y - mean.y);
  }
  const double m = static_cast<double>(points.size());
  const double sigma = 0.5 * (std::sqrt(vx / (m - 1.0)) + std::sqrt(vy / (m - 1.0)));
  return std::max(kMinBandwidth, std::pow(m, -1.0 / 6.0) * sigma);
}

double kde_density(std::span<const GSPoint> points, double bandwidth, GSPoint query) {
  if (!(bandwidth > 0.0)) throw InputError("kde bandwidth must be positive");
  if (points.empty()) throw InputError("kde over an empty point set");
  const double inv_two_h2 = 1.0 / (2.0 * bandwidth * bandwidth);
  double sum = 0.0;
  for (const GSPoint& p : points) {
    const double dx = query.x - p.x;
    const double dy = query.y - p.y;
    sum += std::exp(-(dx * dx + dy * dy) * inv_two_h2);
  }
  const double norm = static_cast<double>(points.size()) * 2.0 * std::numbers::pi * bandwidth * bandwidth;
  return sum / norm;
}

double kde_density(const GarmentCluster& cluster, GSPoint query) {
  return kde_density(cluster.points(), cluster.bandwidth(), query);
}

double fit_region(const GarmentCluster& cluster, double coverage) {
  if (!(coverage > 0.0 && coverage <= 1.0)) throw InputError("coverage must lie in (0, 1]");
  const auto& pts = cluster.points();
  std::vector<double> densities;
  densities.reserve(pts.size());
  for (const GSPoint& p : pts) densities.push_back(kde_density(cluster, p));
  std::sort(densities.begin(), densities.end(), std::greater<>());
  const double m = static_cast<double>(pts.size());
  // Guard against q*m landing a hair above an integer (0.95 * 20).
  auto needed = static_cast<std::size_t>(std::ceil(coverage * m - 1e-9));
  needed = std::clamp<std::size_t>(needed, 1, pts.size());
  return densities[needed - 1];
}

GarmentCluster::GarmentCluster(std::string label, std::vector<GSPoint> points, double bandwidth)
    : label_(std::move(label)), points_(std::move(points)) {
  if (points_.empty()) throw InputError("cluster '" + label_ + "' has no points");
  for (const GSPoint& p : points_) {
    if (!p.finite()) throw InputError("cluster '" + label_ + "' has a non-finite point");
  }
  centroid_ = garnet::centroid(points_);
  bandwidth_ = bandwidth > 0.0 ? bandwidth : scott_bandwidth(points_);
}

GarmentCluster GarmentCluster::restore(std::string label, std::vector<GSPoint> points, GSPoint centroid,
                                       double bandwidth, double threshold, double coverage) {
  GarmentCluster c;
  c.label_ = std::move(label);
  c.points_ = std::move(points);
  c.centroid_ = centroid;
  c.bandwidth_ = bandwidth;
  c.threshold_ = threshold;
  c.coverage_ = coverage;
  if (c.points_.empty()) throw InputError("cluster '" + c.label_ + "' has no points");
  if (!(bandwidth > 0.0)) throw InputError("cluster '" + c.label_ + "' has a non-positive bandwidth");
  if (!(threshold >= 0.0)) throw InputError("cluster '" + c.label_ + "' has a negative threshold");
  if (!(coverage > 0.0 && coverage <= 1.0)) throw InputError("cluster '" + c.label_ + "' has invalid coverage");
  if (!(garnet::centroid(c.points_) == centroid)) {
    throw InputError("cluster '" + c.label_ + "' centroid is not the mean of its points");
  }
  return c;
}

void GarmentCluster::fit(double coverage) {
  threshold_ = fit_region(*this, coverage);
  coverage_ = coverage;
}

bool GarmentCluster::contains(GSPoint p) const {
  if (!fitted()) throw InputError("cluster '" + label_ + "' has no fitted region");
  return kde_density(*this, p) >= threshold_;
}

std::string_view to_string(Task task) { return task == Task::shape ? "shape" : "weight"; }

Task parse_task(std::string_view text) {
  if (text == "shape") return Task::shape;
  if (text == "weight" || text == "weight-tier") return Task::weight;
  throw ConfigError("unknown task '" + std::string(text) + "' (expected shape or weight)");
}

SimilarityMap::SimilarityMap(Task task, std::vector<GarmentCluster> clusters)
    : task_(task), clusters_(std::move(clusters)) {
  if (clusters_.size() < 2) throw ConfigError("a similarity map needs at least two clusters");
  std::set<std::string> seen;
  for (const auto& c : clusters_) {
    if (!seen.insert(c.label()).second) throw ConfigError("duplicate cluster label '" + c.label() + "'");
  }
}

std::optional<std::size_t> SimilarityMap::find(const std::string& label) const {
  for (std::size_t i = 0; i < clusters_.size(); ++i) {
    if (clusters_[i].label() == label) return i;
  }
  return std::nullopt;
}

void SimilarityMap::fit_regions(double coverage) {
  for (auto& c : clusters_) c.fit(coverage);
}

bool SimilarityMap::fitted() const {
  return std::all_of(clusters_.begin(), clusters_.end(), [](const auto& c) { return c.fitted(); });
}

SimilarityMap build_map(Task task, std::span<const std::string> label_order, std::span<const GSPoint> points,
                        std::span<const std::size_t> labels, double coverage, double bandwidth) {
  if (points.size() != labels.size()) throw InputError("build_map: one label per point required");
  std::vector<std::vector<GSPoint>> grouped(label_order.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (labels[i] >= label_order.size()) throw InputError("build_map: label index out of range");
    grouped[labels[i]].push_back(points[i]);
  }
  std::vector<GarmentCluster> clusters;
  for (std::size_t c = 0; c < label_order.size(); ++c) {
    if (grouped[c].empty()) throw ConfigError("category '" + label_order[c] + "' has no training points");
    clusters.emplace_back(label_order[c], std::move(grouped[c]), bandwidth);
    clusters.back().fit(coverage);
  }
  return SimilarityMap(task, std::move(clusters));
}

ClusterId classify_point(const SimilarityMap& map, GSPoint p) {
  ClusterId best;
  double best_distance = 0.0;
  for (std::size_t i = 0; i < map.size(); ++i) {
    const auto& c = map.clusters()[i];
    if (!c.contains(p)) continue;
    const double d = gsd(p, c.centroid());
    if (!best || d < best_distance) {
      best = i;
      best_distance = d;
    }
  }
  return best;
}

}  // namespace garnet
