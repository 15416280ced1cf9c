#include "twoball/group.hpp"

#include <charconv>
#include <cmath>
#include <numbers>
#include <numeric>

#include "twoball/error.hpp"

namespace twoball {

std::string_view polygon_name(PolygonId id) {
  switch (id) {
    case PolygonId::Square: return "square";
    case PolygonId::EqTriangle: return "eq-triangle";
    case PolygonId::RightIsosceles: return "right-isoceles";
    case PolygonId::Right3060: return "right-30-60";
  }
  return "?";
}

PolygonId parse_polygon(std::string_view name) {
  for (auto id : {PolygonId::Square, PolygonId::EqTriangle, PolygonId::RightIsosceles,
                  PolygonId::Right3060}) {
    if (polygon_name(id) == name) return id;
  }
  if (name == "right-isosceles") return PolygonId::RightIsosceles;
  throw Error(ErrorCode::InvalidArgument,
              "unknown polygon '" + std::string(name) +
                  "' (expected square|eq-triangle|right-isoceles|right-30-60)");
}

int polygon_order(PolygonId id) {
  // lcm of the angle denominators: square pi/2 x4, equilateral pi/3 x3,
  // 45-45-90 (pi/4, pi/4, pi/2), 30-60-90 (pi/6, pi/3, pi/2)
  switch (id) {
    case PolygonId::Square: return 2;
    case PolygonId::EqTriangle: return 3;
    case PolygonId::RightIsosceles: return 4;
    case PolygonId::Right3060: return 6;
  }
  return 1;
}

Mat2 GroupElement::matrix() const {
  if (is_rotation()) {
    const double th = 2.0 * std::numbers::pi * k_ / n_;
    const double c = std::cos(th), s = std::sin(th);
    return {c, -s, s, c};
  }
  const double th = 2.0 * std::numbers::pi * k_ / n_;  // twice the axis angle
  const double c = std::cos(th), s = std::sin(th);
  return {c, s, s, -c};
}

GroupElement compose(GroupElement a, GroupElement b) {
  if (a.order() != b.order()) {
    throw Error(ErrorCode::InvalidArgument, "compose: elements of different groups");
  }
  const int n = a.order();
  if (a.is_rotation() && b.is_rotation()) return GroupElement::rotation(a.k() + b.k(), n);
  if (a.is_rotation()) return GroupElement::reflection(b.k() + a.k(), n);
  if (b.is_rotation()) return GroupElement::reflection(a.k() - b.k(), n);
  return GroupElement::rotation(a.k() - b.k(), n);
}

GroupElement inverse(GroupElement g) {
  if (g.is_reflection()) return g;
  return GroupElement::rotation(-g.k(), g.order());
}

Vec2 apply(GroupElement g, Vec2 v) { return g.matrix() * v; }

double RationalAngle::radians() const { return std::numbers::pi * num / den; }

namespace {
RationalAngle reduced(int num, int den) {
  if (num == 0) return {0, 1};
  const int g = std::gcd(num, den);
  return {num / g, den / g};
}
}  // namespace

Classification classify(GroupElement g) {
  if (g.is_rotation()) return Rotation{reduced(2 * g.k(), g.order())};
  return Reflection{reduced(g.k(), g.order())};
}

int conjugate_axis(GroupElement s, int axis) {
  const int n = s.order();
  // rotation by 2*pi*k/N turns the axis k'*pi/N into (k' + 2k)*pi/N;
  // a reflection in axis j maps axis k' to 2j - k'
  const int k = s.is_rotation() ? axis + 2 * s.k() : 2 * s.k() - axis;
  return ((k % n) + n) % n;
}

std::string to_token(GroupElement g) {
  if (g.is_identity()) return "e";
  return (g.is_rotation() ? "r" : "R") + std::to_string(g.k());
}

GroupElement parse_token(std::string_view token, int n) {
  if (token == "e") return GroupElement::identity(n);
  if (token.size() >= 2 && (token[0] == 'r' || token[0] == 'R')) {
    int k = 0;
    const auto* first = token.data() + 1;
    const auto* last = token.data() + token.size();
    const auto res = std::from_chars(first, last, k);
    if (res.ec == std::errc() && res.ptr == last && k >= 0 && k < n) {
      return token[0] == 'r' ? GroupElement::rotation(k, n) : GroupElement::reflection(k, n);
    }
  }
  throw Error(ErrorCode::InvalidArgument, "bad group token '" + std::string(token) + "'");
}

Group::Group(PolygonId polygon) : polygon_(polygon), n_(polygon_order(polygon)) {
  elements_.reserve(2 * n_);
  for (int k = 0; k < n_; ++k) elements_.push_back(GroupElement::rotation(k, n_));
  for (int k = 0; k < n_; ++k) elements_.push_back(GroupElement::reflection(k, n_));
  table_.assign(size(), std::vector<int>(size()));
  for (const auto& a : elements_) {
    for (const auto& b : elements_) table_[a.index()][b.index()] = compose(a, b).index();
  }
}

GroupElement Group::element(int index) const {
  if (index < 0 || index >= size()) {
    throw Error(ErrorCode::InvalidArgument, "group index out of range");
  }
  return elements_[index];
}

std::vector<GroupElement> Group::rotations() const {
  return {elements_.begin(), elements_.begin() + n_};
}

GroupElement Group::identify(const Mat2& m, double tol) const {
  if (!(tol > 0.0)) throw Error(ErrorCode::InvalidArgument, "identify: tol must be positive");
  const GroupElement* found = nullptr;
  for (const auto& g : elements_) {
    if (frobenius_distance(g.matrix(), m) < tol) {
      if (found != nullptr) {
        throw Error(ErrorCode::Ambiguous, "two group elements within tolerance");
      }
      found = &g;
    }
  }
  if (found == nullptr) throw Error(ErrorCode::NotInGroup, "matrix matches no group element");
  return *found;
}

}  // namespace twoball
