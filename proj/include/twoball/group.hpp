#pragma once

// Exact dihedral groups D_N acting on the plane.
//
// An element is either the rotation by 2*pi*k/N or the reflection in the line
// through the origin at angle k*pi/N, k in [0, N). Composition is integer
// arithmetic mod N; the 2x2 matrix is only a derived view.

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "twoball/vec2.hpp"

namespace twoball {

enum class PolygonId { Square, EqTriangle, RightIsosceles, Right3060 };

std::string_view polygon_name(PolygonId id);     // CLI spelling, e.g. "eq-triangle"
PolygonId parse_polygon(std::string_view name);  // throws Error(InvalidArgument)
int polygon_order(PolygonId id);                 // N: 2, 3, 4, 6

enum class Kind : std::uint8_t { Rotation, Reflection };

class GroupElement {
 public:
  constexpr GroupElement() = default;

  static constexpr GroupElement identity(int n) { return {Kind::Rotation, 0, n}; }
  static constexpr GroupElement rotation(int k, int n) { return {Kind::Rotation, mod(k, n), n}; }
  static constexpr GroupElement reflection(int k, int n) { return {Kind::Reflection, mod(k, n), n}; }

  constexpr Kind kind() const { return kind_; }
  constexpr bool is_rotation() const { return kind_ == Kind::Rotation; }
  constexpr bool is_reflection() const { return kind_ == Kind::Reflection; }
  constexpr bool is_identity() const { return is_rotation() && k_ == 0; }
  /// Rotation: angle 2*pi*k/N. Reflection: axis angle k*pi/N.
  constexpr int k() const { return k_; }
  constexpr int order() const { return n_; }
  /// Flat index in [0, 2N): rotations first, then reflections.
  constexpr int index() const { return is_rotation() ? k_ : n_ + k_; }

  Mat2 matrix() const;

  friend constexpr auto operator<=>(const GroupElement&, const GroupElement&) = default;

 private:
  constexpr GroupElement(Kind kind, int k, int n) : kind_(kind), k_(k), n_(n) {}
  static constexpr int mod(int a, int n) { return ((a % n) + n) % n; }

  Kind kind_ = Kind::Rotation;
  int k_ = 0;
  int n_ = 1;
};

/// matrix(compose(a, b)) == matrix(a) * matrix(b)
GroupElement compose(GroupElement a, GroupElement b);
GroupElement inverse(GroupElement g);
Vec2 apply(GroupElement g, Vec2 v);

/// Angle as the exact rational num/den * pi.
struct RationalAngle {
  int num = 0;
  int den = 1;
  double radians() const;
  friend bool operator==(const RationalAngle&, const RationalAngle&) = default;
};
struct Rotation {
  RationalAngle angle;
};
struct Reflection {
  RationalAngle axis;  // canonical in [0, pi)
};
using Classification = std::variant<Rotation, Reflection>;

Classification classify(GroupElement g);

/// Axis sE of the reflection s R_E s^{-1}; axes are integer indices k (angle k*pi/N).
int conjugate_axis(GroupElement s, int axis);

/// Compact token: "e", "r<k>" for rotations, "R<k>" for reflections.
std::string to_token(GroupElement g);
GroupElement parse_token(std::string_view token, int n);

class Group {
 public:
  explicit Group(PolygonId polygon);

  PolygonId polygon() const { return polygon_; }
  int order_n() const { return n_; }
  int size() const { return 2 * n_; }
  GroupElement identity() const { return GroupElement::identity(n_); }
  GroupElement rotation(int k) const { return GroupElement::rotation(k, n_); }
  GroupElement reflection(int k) const { return GroupElement::reflection(k, n_); }
  GroupElement element(int index) const;

  const std::vector<GroupElement>& elements() const { return elements_; }
  /// The rotation subgroup G_O.
  std::vector<GroupElement> rotations() const;

  /// Product in flat indices; table[a][b] = compose(a, b).index().
  const std::vector<std::vector<int>>& multiplication_table() const { return table_; }

  static constexpr double kDefaultIdentifyTol = 1e-6;

  /// The unique element with ||matrix(g) - m||_F < tol.
  GroupElement identify(const Mat2& m, double tol = kDefaultIdentifyTol) const;

 private:
  PolygonId polygon_;
  int n_;
  std::vector<GroupElement> elements_;
  std::vector<std::vector<int>> table_;
};

inline Group build_group(PolygonId polygon) { return Group(polygon); }

}  // namespace twoball
