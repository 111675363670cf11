#pragma once
// Planar geometry helpers for closed curves given as polylines: winding
// numbers, containment, resampling, distances, and small fitting/hash
// utilities used across the toolkit.

#include <cstdint>
#include <string>
#include <vector>

#include "fibscale/types.hpp"

namespace fibscale {

// winding number of closed polyline `poly` (last->first edge implied) about z.
// Throws UnderResolvedError if the curve passes within `guard` of z, since the
// count would be unreliable.
int winding_number(const std::vector<Cx>& poly, Cx z, double guard = 1e-12);

// positive for counterclockwise orientation
double signed_area(const std::vector<Cx>& poly);

// strict interior test via winding; points within `guard` of the boundary are
// reported as not inside (callers that care should widen or error).
bool point_in_polygon(const std::vector<Cx>& poly, Cx z, double guard = 1e-12);

double polyline_length(const std::vector<Cx>& poly, bool closed);
double polygon_diameter(const std::vector<Cx>& poly);  // bbox diagonal (fast, adequate)
Cx polygon_centroid(const std::vector<Cx>& poly);

// min distance from z to closed polyline
double distance_to_polyline(const std::vector<Cx>& poly, Cx z);

// Resample a closed polyline so no edge exceeds max_step.  Vertices listed in
// `corners` (indices into poly) are preserved exactly; new points are inserted
// by linear interpolation only, never removing existing vertices.
std::vector<Cx> densify_closed(const std::vector<Cx>& poly, double max_step,
                               std::vector<size_t>* corner_indices = nullptr);

// Uniform-grid bucketed nearest neighbour queries for Hausdorff distances.
class PointGrid {
 public:
  explicit PointGrid(const std::vector<Cx>& pts);
  double nearest(Cx q) const;  // distance to the closest stored point

 private:
  std::vector<Cx> pts_;
  std::vector<std::vector<uint32_t>> cells_;
  double x0_ = 0, y0_ = 0, h_ = 1;
  int nx_ = 1, ny_ = 1;
  int cell_of(double x, double y, bool clampx) const;
};

// directed Hausdorff sup_{a in A} dist(a, B)
double directed_hausdorff(const std::vector<Cx>& a, const std::vector<Cx>& b);
// symmetric Hausdorff
double hausdorff_distance(const std::vector<Cx>& a, const std::vector<Cx>& b);

// least-squares line fit y = slope*x + intercept; returns {slope, intercept}
struct LineFit {
  double slope = 0;
  double intercept = 0;
};
LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

// FNV-1a over a byte string; used for config hashes embedded in outputs.
uint64_t fnv1a(const std::string& bytes);

}  // namespace fibscale
