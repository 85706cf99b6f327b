#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "garnet/gspoint.hpp"

namespace garnet {

// Euclidean distance between two map points.
double gsd(GSPoint a, GSPoint b);

// Coordinate-wise arithmetic mean. Throws InputError on an empty list.
GSPoint centroid(std::span<const GSPoint> points);

// Scott's rule for an isotropic 2D kernel: m^(-1/6) times the mean of the two
// marginal sample standard deviations, floored at kMinBandwidth.
double scott_bandwidth(std::span<const GSPoint> points);

inline constexpr double kMinBandwidth = 1e-6;

// The training points of one category, with a Gaussian KDE and a
// density-superlevel confidence region.
class GarmentCluster {
 public:
  // bandwidth <= 0 selects Scott's rule. Throws InputError on empty points or
  // non-finite coordinates.
  GarmentCluster(std::string label, std::vector<GSPoint> points, double bandwidth = 0.0);

  // Restores a cluster verbatim (checkpoint loading). Validates invariants.
  static GarmentCluster restore(std::string label, std::vector<GSPoint> points, GSPoint centroid,
                                double bandwidth, double threshold, double coverage);

  const std::string& label() const { return label_; }
  const std::vector<GSPoint>& points() const { return points_; }
  GSPoint centroid() const { return centroid_; }
  double bandwidth() const { return bandwidth_; }
  double threshold() const { return threshold_; }
  double coverage() const { return coverage_; }
  bool fitted() const { return coverage_ > 0.0; }

  // Sets the region from the coverage target (see fit_region).
  void fit(double coverage);
  // Region membership: density(p) >= threshold. Requires fitted().
  bool contains(GSPoint p) const;

 private:
  GarmentCluster() = default;

  std::string label_;
  std::vector<GSPoint> points_;
  GSPoint centroid_;
  double bandwidth_ = 0.0;
  double threshold_ = 0.0;
  double coverage_ = 0.0;
};

// f(q) = 1 / (m 2 pi h^2) * sum_i exp(-|q - p_i|^2 / (2 h^2)).
double kde_density(std::span<const GSPoint> points, double bandwidth, GSPoint query);
double kde_density(const GarmentCluster& cluster, GSPoint query);

// Largest threshold such that at least ceil(q m) of the cluster's own points
// have density >= threshold. Throws InputError unless 0 < q <= 1.
double fit_region(const GarmentCluster& cluster, double coverage);

// Index of a cluster within its map; nullopt means "unknown".
using ClusterId = std::optional<std::size_t>;

// Which classifier a map was trained for.
enum class Task { shape, weight };

std::string_view to_string(Task task);
Task parse_task(std::string_view text);

class SimilarityMap {
 public:
  SimilarityMap() = default;
  // Requires >= 2 clusters with unique labels.
  SimilarityMap(Task task, std::vector<GarmentCluster> clusters);

  Task task() const { return task_; }
  const std::vector<GarmentCluster>& clusters() const { return clusters_; }
  std::size_t size() const { return clusters_.size(); }
  const std::string& label(std::size_t id) const { return clusters_.at(id).label(); }
  std::optional<std::size_t> find(const std::string& label) const;

  // Refits every cluster's region to a new coverage target.
  void fit_regions(double coverage);
  bool fitted() const;

 private:
  Task task_ = Task::shape;
  std::vector<GarmentCluster> clusters_;
};

// Groups labelled points into clusters (in order of first appearance of each
// label in `label_order`), fits each with `coverage`.
SimilarityMap build_map(Task task, std::span<const std::string> label_order,
                        std::span<const GSPoint> points, std::span<const std::size_t> labels,
                        double coverage, double bandwidth = 0.0);

// Among clusters whose region contains p, the one with the nearest centroid;
// ties resolve to the earlier cluster. nullopt when no region contains p.
ClusterId classify_point(const SimilarityMap& map, GSPoint p);

}  // namespace garnet
