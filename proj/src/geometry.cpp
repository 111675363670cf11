#include "fibscale/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace fibscale {

namespace {

double seg_dist(Cx a, Cx b, Cx z) {
  Cx ab = b - a;
  double L2 = std::norm(ab);
  if (L2 == 0) return std::abs(z - a);
  double t = ((z.real() - a.real()) * ab.real() + (z.imag() - a.imag()) * ab.imag()) / L2;
  t = std::clamp(t, 0.0, 1.0);
  return std::abs(z - (a + t * ab));
}

}  // namespace

int winding_number(const std::vector<Cx>& poly, Cx z, double guard) {
  if (poly.size() < 3) throw ConfigError("winding_number: degenerate polyline");
  double total = 0;
  size_t n = poly.size();
  for (size_t i = 0; i < n; ++i) {
    Cx a = poly[i] - z;
    Cx b = poly[(i + 1) % n] - z;
    if (seg_dist(poly[i], poly[(i + 1) % n], z) < guard)
      throw UnderResolvedError("winding_number: point too close to curve at vertex " + std::to_string(i));
    // turn angle of this edge as seen from z
    total += std::arg(b / a);
  }
  double w = total / (2.0 * M_PI);
  return static_cast<int>(std::lround(w));
}

double signed_area(const std::vector<Cx>& poly) {
  double s = 0;
  size_t n = poly.size();
  for (size_t i = 0; i < n; ++i) {
    Cx a = poly[i], b = poly[(i + 1) % n];
    s += a.real() * b.imag() - b.real() * a.imag();
  }
  return 0.5 * s;
}

bool point_in_polygon(const std::vector<Cx>& poly, Cx z, double guard) {
  if (distance_to_polyline(poly, z) < guard) return false;
  return winding_number(poly, z, guard * 0.5) != 0;
}

double polyline_length(const std::vector<Cx>& poly, bool closed) {
  double L = 0;
  for (size_t i = 0; i + 1 < poly.size(); ++i) L += std::abs(poly[i + 1] - poly[i]);
  if (closed && poly.size() > 1) L += std::abs(poly.front() - poly.back());
  return L;
}

double polygon_diameter(const std::vector<Cx>& poly) {
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (Cx p : poly) {
    xmin = std::min(xmin, p.real());
    xmax = std::max(xmax, p.real());
    ymin = std::min(ymin, p.imag());
    ymax = std::max(ymax, p.imag());
  }
  return std::hypot(xmax - xmin, ymax - ymin);
}

Cx polygon_centroid(const std::vector<Cx>& poly) {
  Cx s = 0;
  for (Cx p : poly) s += p;
  return s / static_cast<double>(poly.size());
}

double distance_to_polyline(const std::vector<Cx>& poly, Cx z) {
  double d = std::numeric_limits<double>::infinity();
  size_t n = poly.size();
  for (size_t i = 0; i < n; ++i) d = std::min(d, seg_dist(poly[i], poly[(i + 1) % n], z));
  return d;
}

std::vector<Cx> densify_closed(const std::vector<Cx>& poly, double max_step,
                               std::vector<size_t>* corner_indices) {
  std::vector<Cx> out;
  std::vector<size_t> new_corners;
  size_t n = poly.size();
  size_t ci = 0;  // walk corner_indices in order (assumed sorted)
  for (size_t i = 0; i < n; ++i) {
    if (corner_indices && ci < corner_indices->size() && (*corner_indices)[ci] == i) {
      new_corners.push_back(out.size());
      ++ci;
    }
    out.push_back(poly[i]);
    Cx a = poly[i], b = poly[(i + 1) % n];
    double L = std::abs(b - a);
    if (L > max_step) {
      int k = static_cast<int>(std::ceil(L / max_step));
      for (int j = 1; j < k; ++j)
        out.push_back(a + (b - a) * (static_cast<double>(j) / k));
    }
  }
  if (corner_indices) *corner_indices = new_corners;
  return out;
}

// ---- PointGrid --------------------------------------------------------------

PointGrid::PointGrid(const std::vector<Cx>& pts) : pts_(pts) {
  if (pts_.empty()) throw ConfigError("PointGrid: empty point set");
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (Cx p : pts_) {
    xmin = std::min(xmin, p.real());
    xmax = std::max(xmax, p.real());
    ymin = std::min(ymin, p.imag());
    ymax = std::max(ymax, p.imag());
  }
  double span = std::max({xmax - xmin, ymax - ymin, 1e-30});
  int target = std::max(1, static_cast<int>(std::sqrt(static_cast<double>(pts_.size()))));
  h_ = span / target;
  x0_ = xmin;
  y0_ = ymin;
  nx_ = static_cast<int>((xmax - xmin) / h_) + 1;
  ny_ = static_cast<int>((ymax - ymin) / h_) + 1;
  cells_.resize(static_cast<size_t>(nx_) * ny_);
  for (uint32_t i = 0; i < pts_.size(); ++i) {
    int cx = std::clamp(static_cast<int>((pts_[i].real() - x0_) / h_), 0, nx_ - 1);
    int cy = std::clamp(static_cast<int>((pts_[i].imag() - y0_) / h_), 0, ny_ - 1);
    cells_[static_cast<size_t>(cy) * nx_ + cx].push_back(i);
  }
}

double PointGrid::nearest(Cx q) const {
  int cx = std::clamp(static_cast<int>((q.real() - x0_) / h_), 0, nx_ - 1);
  int cy = std::clamp(static_cast<int>((q.imag() - y0_) / h_), 0, ny_ - 1);
  double best = std::numeric_limits<double>::infinity();
  // expand rings until the found distance beats the closest unexplored ring
  for (int r = 0; r < std::max(nx_, ny_) + 1; ++r) {
    if (best < (r - 1) * h_ && r > 0) break;
    bool any = false;
    for (int dy = -r; dy <= r; ++dy) {
      int yy = cy + dy;
      if (yy < 0 || yy >= ny_) continue;
      for (int dx = -r; dx <= r; ++dx) {
        if (std::max(std::abs(dx), std::abs(dy)) != r) continue;  // ring only
        int xx = cx + dx;
        if (xx < 0 || xx >= nx_) continue;
        any = true;
        for (uint32_t idx : cells_[static_cast<size_t>(yy) * nx_ + xx])
          best = std::min(best, std::abs(pts_[idx] - q));
      }
    }
    if (!any && best < std::numeric_limits<double>::infinity()) break;
  }
  return best;
}

int PointGrid::cell_of(double, double, bool) const { return 0; }

double directed_hausdorff(const std::vector<Cx>& a, const std::vector<Cx>& b) {
  PointGrid grid(b);
  double worst = 0;
  for (Cx p : a) worst = std::max(worst, grid.nearest(p));
  return worst;
}

double hausdorff_distance(const std::vector<Cx>& a, const std::vector<Cx>& b) {
  return std::max(directed_hausdorff(a, b), directed_hausdorff(b, a));
}

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw ConfigError("fit_line: need >= 2 points");
  double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  double det = n * sxx - sx * sx;
  if (std::abs(det) < 1e-300) throw ConfigError("fit_line: degenerate abscissae");
  LineFit f;
  f.slope = (n * sxy - sx * sy) / det;
  f.intercept = (sy * sxx - sx * sxy) / det;
  return f;
}

uint64_t fnv1a(const std::string& bytes) {
  uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace fibscale
