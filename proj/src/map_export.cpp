#include "garnet/map_export.hpp"

#include <algorithm>
#include <array>
#include <ostream>

#include "garnet/errors.hpp"

namespace garnet {

namespace {

constexpr std::array<const char*, 8> kPalette{"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                              "#9467bd", "#8c564b", "#e377c2", "#17becf"};

GSPoint lerp(GSPoint p, double vp, GSPoint q, double vq, double level) {
  const double t = vp == vq ? 0.5 : (level - vp) / (vq - vp);
  return {p.x + t * (q.x - p.x), p.y + t * (q.y - p.y)};
}

}  // namespace

std::vector<Segment> trace_contour(const std::function<double(GSPoint)>& field, double level, GSPoint lo, GSPoint hi,
                                   std::size_t samples) {
  if (samples < 2) throw InputError("contour grid needs at least 2 samples per axis");
  const double sx = (hi.x - lo.x) / static_cast<double>(samples - 1);
  const double sy = (hi.y - lo.y) / static_cast<double>(samples - 1);
  std::vector<double> values(samples * samples);
  auto at = [&](std::size_t i, std::size_t j) -> GSPoint {
    return {lo.x + static_cast<double>(i) * sx, lo.y + static_cast<double>(j) * sy};
  };
  for (std::size_t j = 0; j < samples; ++j) {
    for (std::size_t i = 0; i < samples; ++i) values[j * samples + i] = field(at(i, j));
  }

  std::vector<Segment> segments;
  for (std::size_t j = 0; j + 1 < samples; ++j) {
    for (std::size_t i = 0; i + 1 < samples; ++i) {
      // Corners counter-clockwise from bottom-left.
      const std::array<GSPoint, 4> p{at(i, j), at(i + 1, j), at(i + 1, j + 1), at(i, j + 1)};
      const std::array<double, 4> v{values[j * samples + i], values[j * samples + i + 1],
                                    values[(j + 1) * samples + i + 1], values[(j + 1) * samples + i]};
      int mask = 0;
      for (int k = 0; k < 4; ++k) mask |= (v[k] >= level ? 1 : 0) << k;
      if (mask == 0 || mask == 15) continue;
      auto edge = [&](int e) { return lerp(p[e], v[e], p[(e + 1) % 4], v[(e + 1) % 4], level); };
      // Edge e joins corner e and corner e+1.
      auto crosses = [&](int e) { return ((mask >> e) & 1) != ((mask >> ((e + 1) % 4)) & 1); };
      std::vector<int> edges;
      for (int e = 0; e < 4; ++e) {
        if (crosses(e)) edges.push_back(e);
      }
      if (edges.size() == 2) {
        segments.push_back({edge(edges[0]), edge(edges[1])});
      } else {
        const bool centre_in = (v[0] + v[1] + v[2] + v[3]) / 4.0 >= level;
        const bool corner0_in = (mask & 1) != 0;
        if (centre_in == corner0_in) {
          segments.push_back({edge(0), edge(1)});
          segments.push_back({edge(2), edge(3)});
        } else {
          segments.push_back({edge(3), edge(0)});
          segments.push_back({edge(1), edge(2)});
        }
      }
    }
  }
  return segments;
}

void write_points_csv(std::ostream& out, const SimilarityMap& map) {
  const auto prec = out.precision(17);
  out << "label,x,y\n";
  for (const auto& c : map.clusters()) {
    for (const GSPoint& p : c.points()) out << c.label() << ',' << p.x << ',' << p.y << '\n';
  }
  out.precision(prec);
}

void write_map_svg(std::ostream& out, const SimilarityMap& map, std::size_t grid, const std::vector<GSPoint>& path) {
  GSPoint lo{1e300, 1e300};
  GSPoint hi{-1e300, -1e300};
  double pad = 0.0;
  for (const auto& c : map.clusters()) {
    for (const GSPoint& p : c.points()) {
      lo = {std::min(lo.x, p.x), std::min(lo.y, p.y)};
      hi = {std::max(hi.x, p.x), std::max(hi.y, p.y)};
    }
    pad = std::max(pad, 3.0 * c.bandwidth());
  }
  lo = {lo.x - pad, lo.y - pad};
  hi = {hi.x + pad, hi.y + pad};

  constexpr double kSize = 800.0;
  const double scale = kSize / std::max(hi.x - lo.x, hi.y - lo.y);
  auto sx = [&](double x) { return (x - lo.x) * scale; };
  auto sy = [&](double y) { return kSize - (y - lo.y) * scale; };

  const auto prec = out.precision(6);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kSize << "\" height=\"" << kSize + 30
      << "\" viewBox=\"0 0 " << kSize << ' ' << kSize + 30 << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (std::size_t ci = 0; ci < map.size(); ++ci) {
    const auto& c = map.clusters()[ci];
    const char* color = kPalette[ci % kPalette.size()];
    out << "<g fill=\"" << color << "\" fill-opacity=\"0.35\">\n";
    for (const GSPoint& p : c.points()) {
      out << "<circle cx=\"" << sx(p.x) << "\" cy=\"" << sy(p.y) << "\" r=\"1.5\"/>\n";
    }
    out << "</g>\n";
    if (c.fitted()) {
      out << "<g stroke=\"" << color << "\" stroke-width=\"1.5\" fill=\"none\">\n";
      const auto segments =
          trace_contour([&c](GSPoint q) { return kde_density(c, q); }, c.threshold(), lo, hi, grid);
      for (const Segment& s : segments) {
        out << "<line x1=\"" << sx(s.a.x) << "\" y1=\"" << sy(s.a.y) << "\" x2=\"" << sx(s.b.x) << "\" y2=\""
            << sy(s.b.y) << "\"/>\n";
      }
      out << "</g>\n";
    }
    const GSPoint m = c.centroid();
    out << "<g><rect x=\"" << sx(m.x) - 5 << "\" y=\"" << sy(m.y) - 5 << "\" width=\"10\" height=\"10\" fill=\""
        << color << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << sx(m.x) + 8 << "\" y=\"" << sy(m.y) - 8 << "\" font-size=\"14\" font-family=\"sans-serif\">"
        << c.label() << "</text></g>\n";
  }
  if (!path.empty()) {
    out << "<polyline fill=\"none\" stroke=\"black\" stroke-width=\"1\" points=\"";
    for (const GSPoint& p : path) out << sx(p.x) << ',' << sy(p.y) << ' ';
    out << "\"/>\n";
  }
  out << "<text x=\"10\" y=\"" << kSize + 20 << "\" font-size=\"12\" font-family=\"sans-serif\">task: "
      << to_string(map.task()) << "</text>\n";
  out << "</svg>\n";
  out.precision(prec);
}

}  // namespace garnet
