#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "twoball/dynamics.hpp"
#include "twoball/error.hpp"
#include "twoball/lifting.hpp"

using namespace twoball;

namespace {

constexpr PolygonId kAll[] = {PolygonId::Square, PolygonId::EqTriangle, PolygonId::RightIsosceles,
                              PolygonId::Right3060};

struct LiftedRun {
  Table table;
  UnfoldingAtlas atlas;
  Trajectory traj;
  LiftedTrajectory lifted;
};

LiftedRun lifted_run(PolygonId p, double r, std::size_t events, std::uint64_t seed) {
  LiftedRun run{make_table(p, r), {}, {}, {}};
  run.atlas = build_atlas(run.table);
  Rng rng(seed);
  run.traj = simulate(run.table, sample_state(run.table, rng), Budget{.events = events, .max_time = {}});
  run.lifted = lift_trajectory(run.table, run.atlas, run.traj);
  return run;
}

// Brute force over a block of lattice translates around the Cramer solution,
// using the unreduced unfolded positions.
double brute_cylinder_distance(const UnfoldingAtlas& atlas, const LiftedState& s, GroupElement h) {
  const Vec2 d = s.unfolded[0] - h.matrix() * s.unfolded[1];
  const Vec2 b0 = atlas.basis[0], b1 = atlas.basis[1];
  const double det = cross(b0, b1);
  const int x = int(std::floor(cross(d, b1) / det)), y = int(std::floor(cross(b0, d) / det));
  double best = 1e300;
  for (int i = x - 3; i <= x + 3; ++i) {
    for (int j = y - 3; j <= y + 3; ++j) {
      best = std::min(best, norm(d - double(i) * b0 - double(j) * b1));
    }
  }
  return best;
}

}  // namespace

TEST(CylinderAtCollision, MatchesLabelsAndBruteForce) {
  for (auto p : kAll) {
    const LiftedRun run = lifted_run(p, 0.1, 3000, 11);
    std::size_t seen = 0;
    for (const auto& le : run.lifted.events) {
      if (!le.cylinder) continue;
      ++seen;
      const GroupElement h = *le.cylinder;
      EXPECT_EQ(h, compose(le.state.label(0), inverse(le.state.label(1))));
      EXPECT_NEAR(brute_cylinder_distance(run.atlas, le.state, h), run.table.contact, 1e-9);
      for (const auto& other : run.table.group.elements()) {
        if (other != h) EXPECT_GT(brute_cylinder_distance(run.atlas, le.state, other), run.table.contact - 1e-9);
      }
    }
    EXPECT_GT(seen, 100u) << polygon_name(p);
  }
}

TEST(CylinderAtCollision, NoContactThrows) {
  const Table t = make_table(PolygonId::Square, 0.1);
  const auto atlas = build_atlas(t);
  PhaseState s;
  s.q = {Vec2{0.3, 0.3}, Vec2{0.6, 0.5}};
  s.v = {Vec2{1, 0}, Vec2{0, 1}};
  const GroupElement e = t.group.identity();
  const LiftedState ls = lift_state(t, atlas, s, {AffineLift{e, {}}, AffineLift{e, {}}});
  try {
    cylinder_at_collision(t, atlas, ls);
    FAIL() << "expected NoCylinderFound";
  } catch (const Error& err) {
    EXPECT_EQ(err.code(), ErrorCode::NoCylinderFound);
  }
}

TEST(PredictNextCylinder, Examples) {
  const Group g(PolygonId::Square);
  const GroupElement e = g.identity(), R0 = g.reflection(0), R1 = g.reflection(1), r1 = g.rotation(1);
  // first collision on C_e, junction (R0, e): h = R0^-1 = R0
  EXPECT_EQ(predict_next_cylinder(e, e, Junction{{R0, e}}), R0);
  // simple junction keeps the cylinder
  EXPECT_EQ(predict_next_cylinder(R1, e, Junction{{r1, r1}}), R1);
  // explicit product as matrices
  const Mat2 m = R1.matrix() * R0.matrix() * r1.matrix() * R1.matrix();
  EXPECT_EQ(predict_next_cylinder(R1, R1, Junction{{R0, r1}}), g.identify(m));
}

TEST(Lift, WallHitsKeepLiftedVelocityAndStraightLines) {
  for (auto p : kAll) {
    const LiftedRun run = lifted_run(p, 0.1, 5000, 5);
    std::array<Vec2, 2> base = run.lifted.initial.unfolded;
    std::array<Vec2, 2> w = run.lifted.initial.w;
    double t0 = run.lifted.initial.time, worst_line = 0.0, worst_w = 0.0;
    for (std::size_t i = 0; i < run.lifted.events.size(); ++i) {
      const auto& le = run.lifted.events[i];
      const auto& e = run.traj.events[i];
      for (int k = 0; k < 2; ++k) {
        // w = g v, independently from the label matrix
        const Vec2 gv = le.state.label(k).matrix() * e.post.v[k];
        worst_w = std::max(worst_w, norm(gv - le.state.w[k]));
      }
      if (le.type == EventType::WallHit) {
        for (int k = 0; k < 2; ++k) {
          worst_line = std::max(worst_line, norm(le.state.unfolded[k] - (base[k] + (le.state.time - t0) * w[k])));
          EXPECT_LT(norm(le.state.w[k] - w[k]), 1e-12);
        }
      } else {
        base = le.state.unfolded;
        w = le.state.w;
        t0 = le.state.time;
      }
    }
    EXPECT_LT(worst_line, 1e-9) << polygon_name(p);
    EXPECT_LT(worst_w, 1e-14) << polygon_name(p);
  }
}

TEST(Lift, TransparentDisksGiveAffineBaseProjection) {
  // r = 0: no collisions, so the lifted flow is linear and its projection to
  // every base subspace is an affine function of time
  for (auto p : kAll) {
    const Table t = make_table(p, 0.0);
    const auto atlas = build_atlas(t);
    Rng rng(21);
    const PhaseState s0 = sample_state(t, rng);
    const Trajectory traj = simulate(t, s0, Budget{.events = 500, .max_time = {}});
    const LiftedTrajectory lifted = lift_trajectory(t, atlas, traj);
    for (const auto& g : t.group.elements()) {
      const Cylinder c = make_cylinder(g, 0.0);
      auto project = [&](const LiftedState& ls) {
        Eigen::Vector4d x(ls.unfolded[0].x, ls.unfolded[0].y, ls.unfolded[1].x, ls.unfolded[1].y);
        return Eigen::Vector2d(c.base.transpose() * x);
      };
      const Eigen::Vector2d p0 = project(lifted.initial);
      Eigen::Vector4d w(lifted.initial.w[0].x, lifted.initial.w[0].y, lifted.initial.w[1].x, lifted.initial.w[1].y);
      const Eigen::Vector2d rate = c.base.transpose() * w;
      double worst = 0.0;
      for (const auto& le : lifted.events) {
        EXPECT_FALSE(le.cylinder.has_value());
        worst = std::max(worst, (project(le.state) - (p0 + (le.state.time - lifted.initial.time) * rate)).norm());
      }
      EXPECT_LT(worst, 1e-9) << polygon_name(p) << ' ' << to_token(g);
    }
  }
}

TEST(SemiConjugacy, TenThousandEvents) {
  for (auto p : kAll) {
    const LiftedRun run = lifted_run(p, 0.1, 10000, 7);
    const SemiConjugacyReport rep = verify_semiconjugacy(run.table, run.atlas, run.traj, run.lifted);
    EXPECT_EQ(rep.samples, 10000u);
    EXPECT_LT(rep.max_deviation(), 1e-6) << polygon_name(p);
    // the upstairs velocity is never resynchronised, so rounding accumulates
    EXPECT_LT(rep.max_cylinder_velocity, 1e-10) << polygon_name(p);
    EXPECT_EQ(rep.label_mismatches, 0u) << polygon_name(p);
  }
}

TEST(SemiConjugacy, CorruptedLabelIsFlagged) {
  LiftedRun run = lifted_run(PolygonId::EqTriangle, 0.1, 2000, 7);
  std::size_t target = 0;
  for (std::size_t i = 100; i < run.lifted.events.size(); ++i) {
    if (run.lifted.events[i].cylinder) {
      target = i;
      break;
    }
  }
  ASSERT_GT(target, 0u);
  auto& le = run.lifted.events[target];
  auto lift = le.state.lift;
  lift[1].g = compose(lift[1].g, run.table.group.reflection(0));
  le.state = lift_state(run.table, run.atlas, run.traj.events[target].post, lift);
  const SemiConjugacyReport rep = verify_semiconjugacy(run.table, run.atlas, run.traj, run.lifted);
  EXPECT_TRUE(rep.max_deviation() > 1e-3 || rep.label_mismatches > 0);
  EXPECT_GT(rep.label_mismatches, 0u);
}

TEST(LiftCheck, CylinderPredictionIslandsAndSandwiches) {
  std::size_t sandwiches = 0, rotation_steps = 0;
  for (auto p : kAll) {
    const LiftedRun run = lifted_run(p, 0.1, 20000, 9);
    const LiftCheckReport rep = lift_check(run.table, run.atlas, run.traj, run.lifted);
    EXPECT_GT(rep.where_pairs, 1000u);
    EXPECT_EQ(rep.where_matches, rep.where_pairs) << polygon_name(p);
    EXPECT_EQ(rep.label_matches, rep.collisions);
    EXPECT_EQ(rep.islands_constant, rep.islands);
    EXPECT_EQ(rep.sandwiches_same, rep.sandwiches);
    EXPECT_EQ(rep.rotation_steps_ok, rep.rotation_steps);
    EXPECT_EQ(rep.o_poor_windows_ok, rep.o_poor_windows);
    EXPECT_EQ(rep.r_poor_windows_ok, rep.r_poor_windows);
    EXPECT_TRUE(rep.all_ok());
    EXPECT_GT(rep.islands, 0u);
    sandwiches += rep.sandwiches;
    rotation_steps += rep.rotation_steps;
  }
  EXPECT_GT(sandwiches, 0u);
  EXPECT_GT(rotation_steps, 0u);
}

TEST(LiftCheck, CorruptedCylinderBreaksPrediction) {
  LiftedRun run = lifted_run(PolygonId::Square, 0.1, 3000, 4);
  int seen = 0;
  for (auto& le : run.lifted.events) {
    if (le.cylinder && ++seen == 5) {
      le.cylinder = compose(*le.cylinder, run.table.group.rotation(1));
      break;
    }
  }
  const LiftCheckReport rep = lift_check(run.table, run.atlas, run.traj, run.lifted);
  EXPECT_FALSE(rep.all_ok());
  EXPECT_LT(rep.where_matches, rep.where_pairs);
}

TEST(LiftedCsv, HeaderAndRow) {
  EXPECT_EQ(lifted_csv_header(), "event_index,time,cylinder_kind,cylinder_index,z1a,z1b,z2a,z2b,w1x,w1y,w2x,w2y,g1,g2");
  const LiftedRun run = lifted_run(PolygonId::Square, 0.1, 200, 2);
  for (const auto& le : run.lifted.events) {
    const std::string row = to_csv_row(le);
    EXPECT_EQ(std::count(row.begin(), row.end(), ','), 13);
    if (le.cylinder) {
      EXPECT_EQ(row.find(",none,"), std::string::npos);
    } else {
      EXPECT_NE(row.find(",none,-1,"), std::string::npos);
    }
  }
}

// ---------------------------------------------------------------------------
// Cylinder geometry

TEST(Cylinder, SubspacesAreOrthonormalAndComplementary) {
  for (auto p : kAll) {
    const Group grp(p);
    for (const auto& g : grp.elements()) {
      const Cylinder c = make_cylinder(g, 0.2);
      EXPECT_LT((c.generator.transpose() * c.generator - Eigen::Matrix2d::Identity()).norm(), 1e-14);
      EXPECT_LT((c.base.transpose() * c.base - Eigen::Matrix2d::Identity()).norm(), 1e-14);
      EXPECT_LT((c.generator.transpose() * c.base).norm(), 1e-14);
      // A_g is the graph of g: (w, g w)
      const Mat2 m = g.matrix();
      for (int j = 0; j < 2; ++j) {
        const Vec2 w{c.generator(0, j), c.generator(1, j)};
        const Vec2 gw = m * w;
        EXPECT_NEAR(c.generator(2, j), gw.x, 1e-15);
        EXPECT_NEAR(c.generator(3, j), gw.y, 1e-15);
      }
    }
  }
}

TEST(Cylinder, RotationPairsAreTransversal) {
  for (auto p : kAll) {
    const Group grp(p);
    const auto rot = grp.rotations();
    for (std::size_t i = 0; i < rot.size(); ++i) {
      for (std::size_t j = i + 1; j < rot.size(); ++j) {
        const Cylinder a = make_cylinder(rot[i], 0.2), b = make_cylinder(rot[j], 0.2);
        EXPECT_TRUE(transversal(a, b)) << polygon_name(p);
        // oracle: the 4x4 block matrices are nonsingular
        Eigen::Matrix4d ga, lb;
        ga << a.generator, b.generator;
        lb << a.base, b.base;
        EXPECT_GT(std::abs(ga.determinant()), 1e-6);
        EXPECT_GT(std::abs(lb.determinant()), 1e-6);
      }
    }
  }
}

TEST(Cylinder, IdentityAndReflectionMeetInALine) {
  for (auto p : kAll) {
    const Group grp(p);
    const Cylinder ce = make_cylinder(grp.identity(), 0.2);
    for (int k = 0; k < grp.order_n(); ++k) {
      const Cylinder cr = make_cylinder(grp.reflection(k), 0.2);
      EXPECT_EQ(intersection_dimension(ce.generator, cr.generator), 1);
      EXPECT_FALSE(transversal(ce, cr));
      // the line is (a, a) with a on the mirror axis
      const double th = k * std::numbers::pi / grp.order_n();
      const Eigen::Vector4d line(std::cos(th), std::sin(th), std::cos(th), std::sin(th));
      const Eigen::Matrix4d pe = ce.generator * ce.generator.transpose();
      const Eigen::Matrix4d pr = cr.generator * cr.generator.transpose();
      EXPECT_LT((pe * line - line).norm(), 1e-14);
      EXPECT_LT((pr * line - line).norm(), 1e-14);

      const auto frame = orthogonal_frame(ce, cr);
      ASSERT_TRUE(frame.has_value());
      EXPECT_LT(((*frame).transpose() * *frame - Eigen::Matrix4d::Identity()).norm(), 1e-12);
      for (int i = 0; i < 4; ++i) {
        const Eigen::Vector4d f = frame->col(i);
        // every frame vector lies in A or in A-perp, for both cylinders
        for (const Eigen::Matrix4d* pm : {&pe, &pr}) {
          const double in = (*pm * f - f).norm(), out = (*pm * f).norm();
          EXPECT_LT(std::min(in, out), 1e-12);
        }
      }
    }
  }
}

TEST(Cylinder, NonInvolutiveRotationHasNoOrthogonalFrame) {
  const Group grp(PolygonId::EqTriangle);
  EXPECT_FALSE(orthogonal_frame(make_cylinder(grp.identity(), 0.2), make_cylinder(grp.rotation(1), 0.2)));
  const Group sq(PolygonId::Square);
  EXPECT_TRUE(orthogonal_frame(make_cylinder(sq.identity(), 0.2), make_cylinder(sq.rotation(1), 0.2)));
}

TEST(Ons, RotationFamilies) {
  for (auto p : kAll) {
    const Group grp(p);
    std::vector<Cylinder> cyl;
    for (const auto& g : grp.rotations()) cyl.push_back(make_cylinder(g, 0.2));
    const OnsResult res = ons_split(cyl);
    if (p == PolygonId::Square) {
      ASSERT_TRUE(res.split);
      EXPECT_EQ(res.side, (std::vector<int>{1, 2}));
      EXPECT_EQ(res.k1.cols(), 2);
      EXPECT_EQ(res.k2.cols(), 2);
      EXPECT_LT((res.k1.transpose() * res.k2).norm(), 1e-12);
    } else {
      EXPECT_FALSE(res.split) << polygon_name(p);
    }
  }
}

TEST(Ons, IdentityAndReflectionSplitOffOneLine) {
  for (auto p : kAll) {
    const Group grp(p);
    for (int k = 0; k < grp.order_n(); ++k) {
      const OnsResult res =
          ons_split({make_cylinder(grp.identity(), 0.2), make_cylinder(grp.reflection(k), 0.2)});
      ASSERT_TRUE(res.split);
      ASSERT_EQ(res.k2.cols(), 1);
      const double th = k * std::numbers::pi / grp.order_n();
      const Eigen::Vector4d line = Eigen::Vector4d(std::cos(th), std::sin(th), std::cos(th), std::sin(th)) / std::sqrt(2.0);
      EXPECT_NEAR(std::abs(line.dot(res.k2.col(0))), 1.0, 1e-12);
    }
  }
}

TEST(Ons, EmptyAndOversizedInputs) {
  try {
    ons_split({});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidArgument);
  }
}

TEST(Cylinder, SubspacesAreLatticeSubspaces) {
  for (auto p : kAll) {
    const Table t = make_table(p, 0.1);
    const auto atlas = build_atlas(t);
    for (const auto& g : t.group.elements()) {
      const Cylinder c = make_cylinder(g, t.contact);
      const LatticeSubspaceWitness w = lattice_witness(c, atlas);
      ASSERT_TRUE(w.ok) << polygon_name(p) << ' ' << to_token(g);
      // rebuild the Cartesian vectors from integers and check they lie in A_g / L_g
      for (int j = 0; j < 2; ++j) {
        for (const auto* pair : {&w.generator[j], &w.base[j]}) {
          const Vec2 x = double((*pair)[0].a) * atlas.basis[0] + double((*pair)[0].b) * atlas.basis[1];
          const Vec2 y = double((*pair)[1].a) * atlas.basis[0] + double((*pair)[1].b) * atlas.basis[1];
          const Vec2 gx = g.matrix() * x;
          const bool gen = pair == &w.generator[j];
          EXPECT_LT(norm(gen ? y - gx : y + gx), 1e-12);
        }
      }
      const auto& a0 = w.generator[0][0];
      const auto& a1 = w.generator[1][0];
      EXPECT_NE(a0.a * a1.b - a0.b * a1.a, 0);
    }
  }
}
