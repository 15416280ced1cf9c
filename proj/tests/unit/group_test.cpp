#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "twoball/error.hpp"
#include "twoball/group.hpp"
#include "twoball/table.hpp"

using namespace twoball;

namespace {

constexpr PolygonId kAll[] = {PolygonId::Square, PolygonId::EqTriangle, PolygonId::RightIsosceles,
                              PolygonId::Right3060};

// Oracle: close the set of side-reflection matrices of the container under
// multiplication, in floating point, and count distinct matrices.
int closure_size(PolygonId polygon) {
  const Table t = make_table(polygon, 0.0);
  std::vector<Mat2> elems{Mat2{}};
  std::vector<Mat2> gens;
  for (const auto& s : t.sides) {
    const Vec2 d = normalized(s.b - s.a);
    gens.push_back({d.x * d.x - d.y * d.y, 2 * d.x * d.y, 2 * d.x * d.y, d.y * d.y - d.x * d.x});
  }
  for (std::size_t i = 0; i < elems.size(); ++i) {
    for (const auto& g : gens) {
      const Mat2 m = g * elems[i];
      bool seen = false;
      for (const auto& e : elems) seen = seen || frobenius_distance(e, m) < 1e-9;
      if (!seen) elems.push_back(m);
    }
  }
  return static_cast<int>(elems.size());
}

double max_abs_diff(const Mat2& a, const Mat2& b) {
  return std::max({std::abs(a.a - b.a), std::abs(a.b - b.b), std::abs(a.c - b.c), std::abs(a.d - b.d)});
}

}  // namespace

TEST(BuildGroup, OrdersMatchSideReflectionClosure) {
  EXPECT_EQ(build_group(PolygonId::Square).size(), 4);
  EXPECT_EQ(build_group(PolygonId::EqTriangle).size(), 6);
  EXPECT_EQ(build_group(PolygonId::RightIsosceles).size(), 8);
  EXPECT_EQ(build_group(PolygonId::Right3060).size(), 12);
  for (auto p : kAll) EXPECT_EQ(build_group(p).size(), closure_size(p)) << polygon_name(p);
}

TEST(BuildGroup, SquareElements) {
  const Group g(PolygonId::Square);
  ASSERT_EQ(g.size(), 4);
  EXPECT_EQ(to_token(g.element(0)), "e");
  EXPECT_EQ(to_token(g.element(1)), "r1");
  EXPECT_EQ(to_token(g.element(2)), "R0");
  EXPECT_EQ(to_token(g.element(3)), "R1");
}

TEST(Compose, IdentityAndInvolution) {
  for (auto p : kAll) {
    const Group grp(p);
    for (const auto& g : grp.elements()) {
      EXPECT_EQ(compose(grp.identity(), g), g);
      if (g.is_reflection()) EXPECT_TRUE(compose(g, g).is_identity());
    }
  }
}

TEST(Compose, TwoReflectionsInSquareGroup) {
  const Group g(PolygonId::Square);
  const auto r = compose(g.reflection(0), g.reflection(1));
  EXPECT_EQ(r, g.rotation(1));
  // matrix oracle
  const Mat2 m = g.reflection(0).matrix() * g.reflection(1).matrix();
  EXPECT_LT(max_abs_diff(m, Mat2{-1, 0, 0, -1}), 1e-15);
}

TEST(Compose, ClosureAndMatrixFaithfulnessExhaustive) {
  for (auto p : kAll) {
    const Group grp(p);
    for (const auto& a : grp.elements()) {
      for (const auto& b : grp.elements()) {
        const auto c = compose(a, b);
        EXPECT_GE(c.index(), 0);
        EXPECT_LT(c.index(), grp.size());
        EXPECT_LT(max_abs_diff(c.matrix(), a.matrix() * b.matrix()), 1e-14);
      }
    }
  }
}

TEST(Inverse, Examples) {
  const Group g3(PolygonId::EqTriangle);
  EXPECT_TRUE(inverse(g3.identity()).is_identity());
  EXPECT_EQ(inverse(g3.reflection(2)), g3.reflection(2));
  EXPECT_EQ(inverse(g3.rotation(1)), g3.rotation(2));  // 120 -> 240
  for (auto p : kAll) {
    const Group grp(p);
    for (const auto& g : grp.elements()) EXPECT_TRUE(compose(g, inverse(g)).is_identity());
  }
}

TEST(Apply, Examples) {
  const Group g(PolygonId::Square);
  const Vec2 a{1, 0}, b{0.3, -0.7};
  EXPECT_EQ(apply(g.identity(), a), a);
  const Vec2 m = apply(g.reflection(0), b);
  EXPECT_NEAR(m.x, 0.3, 1e-15);
  EXPECT_NEAR(m.y, 0.7, 1e-15);
  const Vec2 r = apply(g.rotation(1), b);
  EXPECT_NEAR(r.x, -0.3, 1e-15);
  EXPECT_NEAR(r.y, 0.7, 1e-15);
  for (auto p : kAll) {
    for (const auto& e : Group(p).elements()) EXPECT_NEAR(norm(apply(e, b)), norm(b), 1e-15);
  }
}

TEST(Classify, KindsAndAngles) {
  const Group g4(PolygonId::RightIsosceles);
  const auto id = classify(g4.identity());
  ASSERT_TRUE(std::holds_alternative<Rotation>(id));
  EXPECT_EQ(std::get<Rotation>(id).angle, (RationalAngle{0, 1}));

  const auto refl = classify(g4.reflection(1));  // axis pi/4, det -1
  ASSERT_TRUE(std::holds_alternative<Reflection>(refl));
  EXPECT_EQ(std::get<Reflection>(refl).axis, (RationalAngle{1, 4}));
  EXPECT_LT(g4.reflection(1).matrix().det(), 0);

  const auto rr = classify(compose(g4.reflection(0), g4.reflection(3)));
  ASSERT_TRUE(std::holds_alternative<Rotation>(rr));
  EXPECT_NE(std::get<Rotation>(rr).angle.num, 0);
}

TEST(Classify, DeterminantMatchesKindExhaustive) {
  for (auto p : kAll) {
    for (const auto& g : Group(p).elements()) {
      EXPECT_NEAR(g.matrix().det(), g.is_rotation() ? 1.0 : -1.0, 1e-14);
      const Mat2 m = g.matrix();
      const Mat2 mtm = m.transposed() * m;
      EXPECT_LT(max_abs_diff(mtm, Mat2{}), 1e-14);
    }
  }
}

TEST(RotationSubgroup, IsDeterminantPlusOneSubsetAndClosed) {
  const int expected[] = {2, 3, 4, 6};
  int i = 0;
  for (auto p : kAll) {
    const Group grp(p);
    const auto rot = grp.rotations();
    EXPECT_EQ(static_cast<int>(rot.size()), expected[i++]);
    int det_plus = 0;
    for (const auto& g : grp.elements()) det_plus += g.matrix().det() > 0 ? 1 : 0;
    EXPECT_EQ(det_plus, static_cast<int>(rot.size()));
    for (const auto& a : rot)
      for (const auto& b : rot) EXPECT_TRUE(compose(a, b).is_rotation());
  }
}

TEST(Identify, RoundTripAndErrors) {
  for (auto p : kAll) {
    const Group grp(p);
    for (const auto& g : grp.elements()) EXPECT_EQ(grp.identify(g.matrix()), g);
  }
  const Group g3(PolygonId::EqTriangle);
  EXPECT_TRUE(g3.identify(Mat2{}).is_identity());

  Mat2 m = g3.rotation(1).matrix();
  m.a += 1e-12;
  EXPECT_EQ(g3.identify(m, 1e-9), g3.rotation(1));

  const Mat2 rot90{0, -1, 1, 0};
  try {
    (void)g3.identify(rot90);
    FAIL() << "expected NotInGroup";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NotInGroup);
  }
  try {
    (void)g3.identify(Mat2{}, 10.0);
    FAIL() << "expected Ambiguous";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Ambiguous);
  }
}

TEST(Identify, ElementsAreWellSeparated) {
  for (auto p : kAll) {
    const Group grp(p);
    const double sep = 2.0 * std::sin(std::numbers::pi / (2.0 * grp.order_n()));
    for (const auto& a : grp.elements())
      for (const auto& b : grp.elements())
        if (a != b) EXPECT_GE(frobenius_distance(a.matrix(), b.matrix()), sep - 1e-12);
  }
}

TEST(ConjugateAxis, Examples) {
  const Group g3(PolygonId::EqTriangle);
  for (int e = 0; e < 3; ++e) EXPECT_EQ(conjugate_axis(g3.identity(), e), e);
  EXPECT_EQ(conjugate_axis(g3.rotation(1), 0), 2);  // 120 degrees = 2*pi/3

  const Group g2(PolygonId::Square);
  EXPECT_EQ(conjugate_axis(g2.rotation(1), 0), 0);
}

TEST(ConjugateAxis, MatchesMatrixConjugationExhaustive) {
  for (auto p : kAll) {
    const Group grp(p);
    for (const auto& s : grp.elements()) {
      for (int e = 0; e < grp.order_n(); ++e) {
        const Mat2 m = s.matrix() * grp.reflection(e).matrix() * inverse(s).matrix();
        const auto h = grp.identify(m);
        ASSERT_TRUE(h.is_reflection());
        EXPECT_EQ(h.k(), conjugate_axis(s, e));
        // s^{-1} R_{sE} s = R_E
        EXPECT_EQ(compose(inverse(s), compose(h, s)), grp.reflection(e));
      }
    }
  }
}

TEST(Tokens, RoundTrip) {
  for (auto p : kAll) {
    const Group grp(p);
    for (const auto& g : grp.elements()) EXPECT_EQ(parse_token(to_token(g), grp.order_n()), g);
  }
  EXPECT_THROW((void)parse_token("R9", 3), Error);
  EXPECT_THROW((void)parse_token("x1", 3), Error);
}
