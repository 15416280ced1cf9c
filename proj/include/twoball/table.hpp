#pragma once

// Polygon tables and their unfolding onto a flat 2-torus.
//
// Coordinates: disk centers live in the eroded polygon P_r. The polygon is
// placed so that the vertex of P_r with angle pi/N sits at the origin; then the
// 2N images g*P_r tile a fundamental domain of the torus lattice and every cell
// translation is a lattice vector.

#include <array>
#include <string>
#include <vector>

#include "twoball/group.hpp"
#include "twoball/vec2.hpp"

namespace twoball {

struct Side {
  int id = 0;
  Vec2 a, b;             // endpoints, counterclockwise
  Vec2 outward;          // unit outward normal
  double offset = 0.0;   // q is inside iff dot(outward, q) <= offset
  GroupElement reflection;  // linear reflection in the side direction

  Vec2 inward() const { return -outward; }
  double signed_distance(Vec2 q) const { return offset - dot(outward, q); }  // >= 0 inside
  /// Affine reflection in the side line.
  Vec2 mirror(Vec2 q) const { return q - 2.0 * (dot(outward, q) - offset) * outward; }
};

struct Table {
  PolygonId polygon = PolygonId::Square;
  Group group{PolygonId::Square};
  double radius = 0.0;       // r
  double contact = 0.0;      // R = 2r
  std::vector<Vec2> vertices;         // container polygon P
  std::vector<Vec2> eroded_vertices;  // P_r, counterclockwise, eroded_vertices[0] = origin
  std::vector<Side> sides;            // sides of P_r; side i joins vertex i and i+1

  bool contains(Vec2 q, double tol = 0.0) const;
  double eroded_area() const;
  double eroded_diameter() const;
  double inradius() const;  // of P
};

/// Scale convention: the shortest side of P has length 1 (for the square and the
/// equilateral triangle this is also the longest side).
Table make_table(PolygonId polygon, double r);

double inradius_of(PolygonId polygon);

enum class LatticeType { Square, Hexagonal, Oblique };
std::string_view lattice_name(LatticeType t);

struct TorusPoint {
  double a = 0.0;  // fractional coordinates in the lattice basis
  double b = 0.0;
};

struct CellMap {
  GroupElement g;
  Vec2 translation;  // cell image of q is g*q + translation
  Vec2 operator()(Vec2 q) const { return apply(g, q) + translation; }
};

struct UnfoldingAtlas {
  std::array<Vec2, 2> basis;  // Cartesian lattice basis, Gauss-reduced, positively oriented
  LatticeType type = LatticeType::Oblique;
  std::vector<CellMap> cells;  // indexed by GroupElement::index()
  double cell_area = 0.0;

  Vec2 to_cartesian(TorusPoint z) const { return z.a * basis[0] + z.b * basis[1]; }
  TorusPoint to_fractional(Vec2 x) const;
  /// Fractional coordinates reduced into [0, 1).
  static TorusPoint reduce(TorusPoint z);
  TorusPoint embed(GroupElement g, Vec2 q) const { return reduce(to_fractional(cells[g.index()](q))); }
  double fundamental_area() const { return std::abs(cross(basis[0], basis[1])); }
  double covering_radius() const;
};

/// Breadth-first unfolding from the identity cell; throws GluingFailure when the
/// cell translations are not consistent with a single lattice.
UnfoldingAtlas build_atlas(const Table& table);

struct Folded {
  GroupElement g;
  Vec2 q;
};

/// Boundary points resolve to the incident cell of lowest element index.
Folded fold(const Table& table, const UnfoldingAtlas& atlas, TorusPoint z);

std::string dump_table_json(const Table& table, const UnfoldingAtlas& atlas);

}  // namespace twoball
