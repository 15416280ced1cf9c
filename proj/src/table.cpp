#include "twoball/table.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numbers>
#include <optional>

#include <nlohmann/json.hpp>

#include "twoball/error.hpp"

namespace twoball {

namespace {

// Shortest side 1; the vertex with angle pi/N comes first.
std::vector<Vec2> container_vertices(PolygonId polygon) {
  const double s3 = std::sqrt(3.0);
  switch (polygon) {
    case PolygonId::Square: return {{0, 0}, {1, 0}, {1, 1}, {0, 1}};
    case PolygonId::EqTriangle: return {{0, 0}, {1, 0}, {0.5, s3 / 2}};
    case PolygonId::RightIsosceles: return {{0, 0}, {1, 0}, {1, 1}};
    case PolygonId::Right3060: return {{0, 0}, {s3, 0}, {s3, 1}};
  }
  return {};
}

double polygon_area(const std::vector<Vec2>& v) {
  double a = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) a += cross(v[i], v[(i + 1) % v.size()]);
  return 0.5 * a;
}

double perimeter(const std::vector<Vec2>& v) {
  double p = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) p += norm(v[(i + 1) % v.size()] - v[i]);
  return p;
}

// All four containers are tangential polygons.
Vec2 incenter(const std::vector<Vec2>& v) {
  if (v.size() == 3) {
    const double a = norm(v[2] - v[1]), b = norm(v[0] - v[2]), c = norm(v[1] - v[0]);
    return (a * v[0] + b * v[1] + c * v[2]) / (a + b + c);
  }
  Vec2 c;
  for (auto p : v) c += p;
  return c / static_cast<double>(v.size());
}

GroupElement side_element(Vec2 a, Vec2 b, int n) {
  double theta = std::atan2(b.y - a.y, b.x - a.x);
  if (theta < 0) theta += std::numbers::pi;
  if (theta >= std::numbers::pi) theta -= std::numbers::pi;
  const double step = std::numbers::pi / n;
  const long k = std::lround(theta / step);
  if (std::abs(theta - k * step) > 1e-9) {
    throw Error(ErrorCode::GluingFailure, "side direction is not a group axis");
  }
  return GroupElement::reflection(static_cast<int>(k), n);
}

}  // namespace

double inradius_of(PolygonId polygon) {
  const auto v = container_vertices(polygon);
  return 2.0 * polygon_area(v) / perimeter(v);
}

bool Table::contains(Vec2 q, double tol) const {
  return std::all_of(sides.begin(), sides.end(),
                     [&](const Side& s) { return s.signed_distance(q) >= -tol; });
}

double Table::eroded_area() const { return polygon_area(eroded_vertices); }

double Table::eroded_diameter() const {
  double d = 0.0;
  for (auto p : eroded_vertices)
    for (auto q : eroded_vertices) d = std::max(d, norm(p - q));
  return d;
}

double Table::inradius() const { return 2.0 * polygon_area(vertices) / perimeter(vertices); }

Table make_table(PolygonId polygon, double r) {
  if (!(r >= 0.0) || !std::isfinite(r)) {
    throw Error(ErrorCode::InvalidArgument, "radius must be a finite non-negative number");
  }
  const auto outer = container_vertices(polygon);
  const double rho = 2.0 * polygon_area(outer) / perimeter(outer);
  if (r >= rho / 2.0) {
    throw Error(ErrorCode::RadiusTooLarge,
                "r = " + std::to_string(r) + " must be below inradius/2 = " + std::to_string(rho / 2.0));
  }

  Table t;
  t.polygon = polygon;
  t.group = Group(polygon);
  t.radius = r;
  t.contact = 2.0 * r;

  // Erosion of a tangential polygon is the homothety about its incenter.
  const Vec2 c = incenter(outer);
  const double ratio = (rho - r) / rho;
  std::vector<Vec2> eroded;
  for (auto p : outer) eroded.push_back(c + ratio * (p - c));
  const Vec2 shift = eroded.front();
  for (auto& p : eroded) p -= shift;
  eroded.front() = {0.0, 0.0};
  for (auto p : outer) t.vertices.push_back(p - shift);
  t.eroded_vertices = eroded;

  const int n = t.group.order_n();
  for (std::size_t i = 0; i < eroded.size(); ++i) {
    Side s;
    s.id = static_cast<int>(i);
    s.a = eroded[i];
    s.b = eroded[(i + 1) % eroded.size()];
    const Vec2 dir = normalized(s.b - s.a);
    s.outward = {dir.y, -dir.x};  // counterclockwise boundary: right-hand normal points out
    s.offset = dot(s.outward, s.a);
    s.reflection = side_element(s.a, s.b, n);
    t.sides.push_back(s);
  }
  return t;
}

std::string_view lattice_name(LatticeType t) {
  switch (t) {
    case LatticeType::Square: return "square";
    case LatticeType::Hexagonal: return "hexagonal";
    case LatticeType::Oblique: return "oblique";
  }
  return "?";
}

TorusPoint UnfoldingAtlas::to_fractional(Vec2 x) const {
  const double det = cross(basis[0], basis[1]);
  return {cross(x, basis[1]) / det, cross(basis[0], x) / det};
}

TorusPoint UnfoldingAtlas::reduce(TorusPoint z) {
  z.a -= std::floor(z.a);
  z.b -= std::floor(z.b);
  if (z.a >= 1.0) z.a = 0.0;
  if (z.b >= 1.0) z.b = 0.0;
  return z;
}

double UnfoldingAtlas::covering_radius() const {
  Vec2 u = basis[0], v = basis[1];
  if (dot(u, v) < 0) v = -v;
  const double a = norm(u), b = norm(v), c = norm(u - v);
  return a * b * c / (2.0 * std::abs(cross(u, v)));
}

namespace {

void gauss_reduce(Vec2& b1, Vec2& b2) {
  for (int iter = 0; iter < 64; ++iter) {
    if (norm2(b2) < norm2(b1)) std::swap(b1, b2);
    const double mu = std::round(dot(b1, b2) / norm2(b1));
    if (mu == 0.0) break;
    b2 -= mu * b1;
  }
}

std::array<Vec2, 2> lattice_basis(const std::vector<Vec2>& gens, double scale) {
  const double eps = 1e-9 * scale;
  std::vector<Vec2> cand;
  for (std::size_t i = 0; i < gens.size(); ++i) {
    for (int ci = -2; ci <= 2; ++ci) {
      if (ci != 0) cand.push_back(ci * gens[i]);
      for (std::size_t j = i + 1; j < gens.size(); ++j) {
        for (int cj = -2; cj <= 2; ++cj) {
          if (cj != 0) cand.push_back(ci * gens[i] + cj * gens[j]);
        }
      }
    }
  }
  std::optional<Vec2> b1, b2;
  for (auto v : cand) {
    if (norm(v) <= eps) continue;
    if (!b1 || norm(v) < norm(*b1) - eps) b1 = v;
  }
  if (!b1) throw Error(ErrorCode::GluingFailure, "no translations found while unfolding");
  for (auto v : cand) {
    if (norm(v) <= eps || std::abs(cross(*b1, v)) <= eps * norm(v)) continue;
    if (!b2 || norm(v) < norm(*b2) - eps) b2 = v;
  }
  if (!b2) throw Error(ErrorCode::GluingFailure, "translation lattice has rank < 2");
  Vec2 u = *b1, w = *b2;
  gauss_reduce(u, w);
  // canonical orientation: u in the upper half plane, positively oriented pair
  if (u.y < -eps || (std::abs(u.y) <= eps && u.x < 0)) u = -u;
  if (cross(u, w) < 0) w = -w;
  if (dot(u, w) < -eps) {
    // prefer the representative making an acute angle with u
    const Vec2 alt = w + u;
    if (std::abs(norm(alt) - norm(w)) <= eps) w = alt;
  }
  return {u, w};
}

}  // namespace

UnfoldingAtlas build_atlas(const Table& table) {
  const Group& group = table.group;
  const double scale = table.eroded_diameter();
  if (scale <= 0.0) throw Error(ErrorCode::GluingFailure, "empty eroded polygon");

  std::vector<std::optional<CellMap>> found(group.size());
  found[group.identity().index()] = CellMap{group.identity(), {0.0, 0.0}};
  std::deque<int> queue{group.identity().index()};
  std::vector<Vec2> gluing;

  while (!queue.empty()) {
    const CellMap cell = *found[queue.front()];
    queue.pop_front();
    for (const Side& s : table.sides) {
      // neighbour across s: q -> cell(mirror_s(q))
      const GroupElement g = compose(cell.g, s.reflection);
      const Vec2 t = cell(s.mirror({0.0, 0.0}));
      auto& slot = found[g.index()];
      if (!slot) {
        slot = CellMap{g, t};
        queue.push_back(g.index());
      } else {
        const Vec2 d = t - slot->translation;
        if (norm(d) > 1e-9 * scale) gluing.push_back(d);
      }
    }
  }
  for (const auto& c : found) {
    if (!c) throw Error(ErrorCode::GluingFailure, "unfolding did not reach every group element");
  }

  UnfoldingAtlas atlas;
  atlas.basis = lattice_basis(gluing, scale);
  atlas.cell_area = table.eroded_area();

  for (auto d : gluing) {
    const TorusPoint f = atlas.to_fractional(d);
    if (std::abs(f.a - std::round(f.a)) > 1e-8 || std::abs(f.b - std::round(f.b)) > 1e-8) {
      throw Error(ErrorCode::GluingFailure, "gluing translation outside the extracted lattice");
    }
  }
  const double expected = group.size() * atlas.cell_area;
  if (std::abs(atlas.fundamental_area() - expected) > 1e-9 * expected) {
    throw Error(ErrorCode::GluingFailure, "cells do not tile the fundamental domain");
  }

  for (const auto& c : found) {
    CellMap m = *c;
    const TorusPoint f = atlas.to_fractional(m.translation);
    m.translation = atlas.to_cartesian({f.a - std::round(f.a), f.b - std::round(f.b)});
    atlas.cells.push_back(m);
  }
  std::sort(atlas.cells.begin(), atlas.cells.end(),
            [](const CellMap& x, const CellMap& y) { return x.g.index() < y.g.index(); });

  const double l0 = norm(atlas.basis[0]), l1 = norm(atlas.basis[1]);
  const double cosang = dot(atlas.basis[0], atlas.basis[1]) / (l0 * l1);
  if (std::abs(l0 - l1) < 1e-9 * l0) {
    if (std::abs(cosang) < 1e-9) atlas.type = LatticeType::Square;
    else if (std::abs(std::abs(cosang) - 0.5) < 1e-9) atlas.type = LatticeType::Hexagonal;
  }

  if (table.contact >= 0.5 * atlas.covering_radius()) {
    throw Error(ErrorCode::RadiusTooLarge, "contact distance exceeds half the lattice covering radius");
  }
  return atlas;
}

Folded fold(const Table& table, const UnfoldingAtlas& atlas, TorusPoint z) {
  const Vec2 x = atlas.to_cartesian(UnfoldingAtlas::reduce(z));
  for (const CellMap& cell : atlas.cells) {
    const GroupElement inv = inverse(cell.g);
    for (int i = -2; i <= 1; ++i) {
      for (int j = -2; j <= 1; ++j) {
        const Vec2 y = x + i * atlas.basis[0] + j * atlas.basis[1];
        const Vec2 q = apply(inv, y - cell.translation);
        if (table.contains(q, 1e-12)) return {cell.g, q};
      }
    }
  }
  throw Error(ErrorCode::GluingFailure, "torus point not covered by any cell");
}

std::string dump_table_json(const Table& table, const UnfoldingAtlas& atlas) {
  using nlohmann::json;
  auto pt = [](Vec2 v) { return json::array({v.x, v.y}); };
  json j;
  j["polygon"] = polygon_name(table.polygon);
  j["radius"] = table.radius;
  j["contact_distance"] = table.contact;
  j["group_order"] = table.group.size();
  for (auto v : table.vertices) j["vertices"].push_back(pt(v));
  for (auto v : table.eroded_vertices) j["eroded_vertices"].push_back(pt(v));
  for (const auto& s : table.sides) {
    j["sides"].push_back({{"id", s.id},
                          {"a", pt(s.a)},
                          {"b", pt(s.b)},
                          {"inward_normal", pt(s.inward())},
                          {"reflection", to_token(s.reflection)}});
  }
  j["lattice"] = {{"type", lattice_name(atlas.type)},
                  {"basis", json::array({pt(atlas.basis[0]), pt(atlas.basis[1])})}};
  for (const auto& c : atlas.cells) {
    j["cells"].push_back({{"g", to_token(c.g)}, {"translation", pt(c.translation)}});
  }
  return j.dump(2);
}

}  // namespace twoball
