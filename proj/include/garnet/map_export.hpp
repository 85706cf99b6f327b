#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <vector>

#include "garnet/similarity_map.hpp"

namespace garnet {

struct Segment {
  GSPoint a;
  GSPoint b;
};

// Iso-line of `field` at `level` over a regular grid of samples spanning
// [lo, hi], by marching squares. Ambiguous saddle cells are resolved with the
// cell-centre average.
std::vector<Segment> trace_contour(const std::function<double(GSPoint)>& field, double level, GSPoint lo, GSPoint hi,
                                   std::size_t samples = 256);

// label,x,y for every training point, cluster by cluster.
void write_points_csv(std::ostream& out, const SimilarityMap& map);

// Points, centroids and region boundaries (density == threshold) of every
// cluster. Extra decision-point paths may be overlaid.
void write_map_svg(std::ostream& out, const SimilarityMap& map, std::size_t grid = 256,
                   const std::vector<GSPoint>& path = {});

}  // namespace garnet
