#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "soilgp/domain.hpp"
#include "soilgp/error.hpp"

namespace soilgp {

/// Hardware limit of the drill travel.
inline constexpr double kMaxDrillDepthMm = 243.0;

/// Auger sampling geometry. Units: g/mm^3, mm, mm.
struct DrillSpec {
  double bulk_density = 0.0;
  double depth = 0.0;
  double auger_diameter = 0.0;

  void validate() const {
    if (!(bulk_density > 0.0) || !std::isfinite(bulk_density)) {
      throw DataError("bulk density must be positive");
    }
    if (!(depth >= 0.0) || depth > kMaxDrillDepthMm) {
      throw DataError("depth must be within [0, 243] mm");
    }
    if (!(auger_diameter > 0.0) || !std::isfinite(auger_diameter)) {
      throw DataError("auger diameter must be positive");
    }
  }
};

/// Mass (g) of the soil core cut by the auger: rho * pi * L * (d/2)^2.
inline double sample_mass(const DrillSpec &spec) {
  spec.validate();
  const double radius = spec.auger_diameter / 2.0;
  return spec.bulk_density * std::numbers::pi * spec.depth * radius * radius;
}

/// Auger diameter (mm) that yields `target_mass` grams at the given density
/// and depth.
inline double auger_diameter(double target_mass, double bulk_density,
                             double depth) {
  if (!(target_mass > 0.0) || !(bulk_density > 0.0) || !(depth > 0.0)) {
    throw DataError("mass, bulk density and depth must be positive");
  }
  return 2.0 * std::sqrt(target_mass / (bulk_density * std::numbers::pi * depth));
}

using Polygon = std::vector<Location>;

struct FieldBoundary {
  Polygon outer;
  std::vector<Polygon> exclusions;
};

namespace detail {

inline bool on_segment(const Location &p, const Location &a,
                       const Location &b, double tol = 1e-9) {
  const double cross = (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x);
  const double len = std::hypot(b.x - a.x, b.y - a.y);
  if (std::abs(cross) > tol * std::max(1.0, len)) {
    return false;
  }
  return p.x >= std::min(a.x, b.x) - tol && p.x <= std::max(a.x, b.x) + tol &&
         p.y >= std::min(a.y, b.y) - tol && p.y <= std::max(a.y, b.y) + tol;
}

inline void require_polygon(const Polygon &poly) {
  if (poly.size() < 3) {
    throw DataError("polygon needs at least 3 vertices");
  }
  double area2 = 0.0;
  for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
    if (!std::isfinite(poly[i].x) || !std::isfinite(poly[i].y)) {
      throw DataError("polygon vertex is not finite");
    }
    area2 += poly[j].x * poly[i].y - poly[i].x * poly[j].y;
  }
  if (std::abs(area2) == 0.0) {
    throw DataError("degenerate polygon (zero area)");
  }
}

}  // namespace detail

/// Even-odd point-in-polygon; points on an edge count as inside.
inline bool point_in_polygon(const Location &p, const Polygon &poly) {
  bool inside = false;
  for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
    const auto &a = poly[i];
    const auto &b = poly[j];
    if (detail::on_segment(p, a, b)) {
      return true;
    }
    if ((a.y > p.y) != (b.y > p.y)) {
      const double x_cross = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
      if (p.x < x_cross) {
        inside = !inside;
      }
    }
  }
  return inside;
}

struct SamplePlan {
  std::vector<Location> points;
  double spacing = 0.0;
};

/// Square lattice with step `spacing` over the boundary's bounding box,
/// centred so the leftover margin is split evenly, filtered to points inside
/// the boundary and outside every exclusion. Rows run south to north and
/// alternate direction (serpentine).
inline SamplePlan grid_plan(const FieldBoundary &boundary, double spacing) {
  if (!(spacing > 0.0) || !std::isfinite(spacing)) {
    throw DataError("spacing must be positive");
  }
  detail::require_polygon(boundary.outer);
  for (const auto &ex : boundary.exclusions) {
    detail::require_polygon(ex);
  }
  Bounds box{boundary.outer.front().x, boundary.outer.front().y,
             boundary.outer.front().x, boundary.outer.front().y};
  for (const auto &v : boundary.outer) {
    box.min_x = std::min(box.min_x, v.x);
    box.min_y = std::min(box.min_y, v.y);
    box.max_x = std::max(box.max_x, v.x);
    box.max_y = std::max(box.max_y, v.y);
  }
  const auto steps = [spacing](double extent) {
    return static_cast<std::size_t>(std::floor(extent / spacing + 1e-9)) + 1;
  };
  const std::size_t nx = steps(box.width());
  const std::size_t ny = steps(box.height());
  const double x0 =
      box.min_x + 0.5 * (box.width() - static_cast<double>(nx - 1) * spacing);
  const double y0 =
      box.min_y + 0.5 * (box.height() - static_cast<double>(ny - 1) * spacing);

  SamplePlan plan;
  plan.spacing = spacing;
  for (std::size_t row = 0; row < ny; ++row) {
    for (std::size_t i = 0; i < nx; ++i) {
      const std::size_t col = (row % 2 == 0) ? i : nx - 1 - i;
      const Location p{x0 + static_cast<double>(col) * spacing,
                       y0 + static_cast<double>(row) * spacing};
      if (!point_in_polygon(p, boundary.outer)) {
        continue;
      }
      const bool excluded =
          std::any_of(boundary.exclusions.begin(), boundary.exclusions.end(),
                      [&p](const Polygon &ex) { return point_in_polygon(p, ex); });
      if (!excluded) {
        plan.points.push_back(p);
      }
    }
  }
  return plan;
}

}  // namespace soilgp
