#include <gtest/gtest.h>

#include <boost/math/distributions/fisher_f.hpp>

#include <cmath>
#include <random>

#include "twoball/analysis.hpp"
#include "twoball/error.hpp"

using namespace twoball;

namespace {

constexpr PolygonId kAll[] = {PolygonId::Square, PolygonId::EqTriangle, PolygonId::RightIsosceles,
                              PolygonId::Right3060};

template <class F>
void expect_code(ErrorCode code, F&& f) {
  try {
    f();
    ADD_FAILURE() << "expected " << to_string(code);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), code) << e.what();
  }
}

// midpoint rule on a fine grid
double quadrature(const Observable& o, const PhaseState& s, double dt, int n = 200000) {
  double sum = 0.0;
  const double h = dt / n;
  for (int i = 0; i < n; ++i) sum += observable_value(o, s.advanced((i + 0.5) * h));
  return sum * h;
}

PhaseState random_flight(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  PhaseState s;
  s.q = {Vec2{0.4 + 0.3 * u(rng), 0.4 + 0.3 * u(rng)}, Vec2{0.4 + 0.3 * u(rng), 0.4 + 0.3 * u(rng)}};
  s.v = {Vec2{u(rng), u(rng)}, Vec2{u(rng), u(rng)}};
  return s;
}

}  // namespace

TEST(Lyapunov, TwoBallsArePositiveAndControlIsNot) {
  for (auto p : kAll) {
    const LyapunovReport r = lyapunov_estimate(make_table(p, 0.1), 5);
    EXPECT_GT(r.lambda, 5.0 * r.stderr_) << polygon_name(p);
    EXPECT_GT(r.stderr_, 0.0);
    EXPECT_EQ(r.batch_lambdas.size(), 20u);
    EXPECT_GT(r.renormalizations, 5000u);
    const LyapunovControl c = lyapunov_control(p, 5);
    EXPECT_LT(std::abs(c.lambda), 3.0 * c.stderr_) << polygon_name(p);
    EXPECT_LT(std::abs(c.lambda), 1e-2 * r.lambda) << polygon_name(p);
  }
}

TEST(Lyapunov, HalvingDeltaKeepsTheEstimate) {
  const Table t = make_table(PolygonId::EqTriangle, 0.1);
  LyapunovOptions half;
  half.delta0 = 0.5e-9;
  const LyapunovReport a = lyapunov_estimate(t, 9), b = lyapunov_estimate(t, 9, half);
  EXPECT_LT(std::abs(a.lambda - b.lambda), 2.0 * a.stderr_);
}

TEST(Lyapunov, VelocitySeparationIsPreservedByThePointParticle) {
  // reflections in the square's sides only flip signs, so velocity differences
  // keep their length exactly
  LyapunovOptions o;
  o.norm = SeparationNorm::Velocity;
  o.n_events = 20000;
  const LyapunovReport r = lyapunov_estimate(make_table(PolygonId::Square, 0.0), 3, o);
  EXPECT_EQ(r.lambda, 0.0);
  const LyapunovReport two = lyapunov_estimate(make_table(PolygonId::Square, 0.1), 3, o);
  EXPECT_GT(two.lambda, 5.0 * two.stderr_);
}

TEST(Lyapunov, Preconditions) {
  const Table t = make_table(PolygonId::Square, 0.1);
  LyapunovOptions o;
  o.delta0 = 1e-6;
  expect_code(ErrorCode::InvalidArgument, [&] { lyapunov_estimate(t, 1, o); });
  o.delta0 = 1e-11;
  expect_code(ErrorCode::InvalidArgument, [&] { lyapunov_estimate(t, 1, o); });
  o = {};
  o.renorm_every = 5;
  expect_code(ErrorCode::InvalidArgument, [&] { lyapunov_estimate(t, 1, o); });
  o = {};
  o.batches = 1;
  expect_code(ErrorCode::InvalidArgument, [&] { lyapunov_estimate(t, 1, o); });
}

TEST(Lyapunov, SaturatedSeparationOverflows) {
  LyapunovOptions o;
  o.delta0 = 1e-7;
  o.renorm_every = 2000;
  expect_code(ErrorCode::SequenceDivergenceOverflow,
              [&] { lyapunov_estimate(make_table(PolygonId::EqTriangle, 0.1), 1, o); });
}

TEST(Lyapunov, CsvRows) {
  LyapunovOptions o;
  o.n_events = 5000;
  const LyapunovReport r = lyapunov_estimate(make_table(PolygonId::Square, 0.1), 2, o);
  const auto rows = lyapunov_csv_rows(r);
  EXPECT_EQ(lyapunov_csv_header(), "batch,lambda");
  ASSERT_EQ(rows.size(), 20u);
  EXPECT_EQ(rows[0].rfind("0,", 0), 0u);
  EXPECT_EQ(rows, lyapunov_csv_rows(lyapunov_estimate(make_table(PolygonId::Square, 0.1), 2, o)));
}

TEST(Birkhoff, ExactIntegralsMatchQuadrature) {
  const Table t = make_table(PolygonId::Square, 0.1);
  std::vector<Observable> obs = builtin_observables(t);
  obs.push_back({ObservableKind::Constant, {}, {}});
  std::mt19937_64 rng(4);
  for (int i = 0; i < 20; ++i) {
    const PhaseState s = random_flight(rng);
    const double dt = 0.05 + 0.4 * (i % 5);
    for (const Observable& o : obs) {
      // the midpoint rule is off by up to one step at each cell boundary crossing
      const double tol = o.kind == ObservableKind::CellIndicator ? 4.0 * dt / 200000 : 1e-7;
      EXPECT_NEAR(observable_integral(o, s, dt), quadrature(o, s, dt), tol) << o.id();
    }
  }
  // head-on pass through zero separation
  PhaseState s;
  s.q = {Vec2{0.0, 0.0}, Vec2{1.0, 0.0}};
  s.v = {Vec2{1.0, 0.0}, Vec2{0.0, 0.0}};
  EXPECT_NEAR(observable_integral(obs[1], s, 2.0), 1.0, 1e-15);
  // resting pair
  s.v = {Vec2{0.3, 0.1}, Vec2{0.3, 0.1}};
  EXPECT_NEAR(observable_integral(obs[1], s, 2.0), 2.0, 1e-15);
}

TEST(Birkhoff, ConstantAveragesToOne) {
  const Table t = make_table(PolygonId::EqTriangle, 0.1);
  Rng rng(3);
  const Trajectory traj = simulate(t, sample_state(t, rng), Budget{.events = 2000, .max_time = {}});
  EXPECT_EQ(birkhoff_average(traj, {ObservableKind::Constant, {}, {}}), 1.0);
}

TEST(Birkhoff, ConfinedTrajectoryMissesTheCell) {
  // point particles: ball 1 runs back and forth along y = 0.1
  const Table t = make_table(PolygonId::Square, 0.0);
  PhaseState s;
  s.q = {Vec2{0.3, 0.1}, Vec2{0.5, 0.5}};
  s.v = {Vec2{0.6, 0.0}, Vec2{0.3, 0.7}};
  const Trajectory traj = simulate(t, s, Budget{.events = 200, .max_time = {}});
  const Observable cell = builtin_observables(t)[2];
  EXPECT_EQ(birkhoff_average(traj, cell), 0.0);
  EXPECT_NEAR(birkhoff_average(traj, builtin_observables(t)[0]), 0.36 / 0.94, 1e-12);
}

TEST(Birkhoff, TimeReversalLeavesAveragesUnchanged) {
  for (auto p : kAll) {
    const Table t = make_table(p, 0.1);
    Rng rng(12);
    const Trajectory fwd = simulate(t, sample_state(t, rng), Budget{.events = 20, .max_time = {}});
    PhaseState back = reversed(fwd.final_state);
    back.t = 0.0;
    const Trajectory bwd = simulate(t, back, Budget{.events = std::nullopt, .max_time = fwd.final_state.t});
    for (const Observable& o : builtin_observables(t)) {
      EXPECT_NEAR(birkhoff_average(fwd, o), birkhoff_average(bwd, o), 1e-9) << polygon_name(p) << " " << o.id();
    }
  }
}

TEST(Birkhoff, LiouvilleKineticShareIsOneHalf) {
  for (auto p : kAll) {
    const Table t = make_table(p, 0.1);
    const Observable ks = builtin_observables(t)[0];
    EXPECT_NEAR(liouville_mean(t, ks, 200000, 1), 0.5, 4e-3) << polygon_name(p);
  }
}

TEST(Occupancy, FlightSplitMatchesSampling) {
  const Table t = make_table(PolygonId::Right3060, 0.1);
  const OccupancyGrid grid(t, 8);
  std::mt19937_64 rng(6);
  for (int i = 0; i < 10; ++i) {
    PhaseState s = random_flight(rng);
    const double dt = 0.7;
    std::vector<double> exact(grid.size(), 0.0), sampled(grid.size(), 0.0);
    grid.add_flight(exact, s, dt);
    const int n = 100000;
    for (int k = 0; k < n; ++k) {
      const PhaseState m = s.advanced((k + 0.5) * dt / n);
      sampled[grid.index(m.q)] += dt / n;
    }
    double total = 0.0;
    for (double x : exact) total += x;
    EXPECT_NEAR(total, dt, 1e-14);
    EXPECT_LT(total_variation(exact, sampled), 1e-4);
  }
}

TEST(Occupancy, ReferenceMatchesLiouvilleSamples) {
  // uniform synthetic samples fed through the histogram land inside the
  // multinomial band of the reference
  for (auto p : kAll) {
    const Table t = make_table(p, 0.1);
    const OccupancyGrid grid(t, 4);
    const std::vector<double> ref = reference_occupancy(t, grid, 4000000, 8);
    double total = 0.0;
    for (double x : ref) total += x;
    EXPECT_NEAR(total, 1.0, 1e-12);
    Rng rng(99);
    const std::size_t n = 400000;
    std::vector<double> hist(grid.size(), 0.0);
    for (std::size_t i = 0; i < n; ++i) hist[grid.index(sample_state(t, rng).q)] += 1.0 / n;
    const CalibrationBand band = calibration_band(ref, n, 200, 5);
    const double tv = total_variation(hist, ref);
    EXPECT_LT(tv, band.upper * 1.1) << polygon_name(p) << " band [" << band.lower << ", " << band.upper << "]";
    EXPECT_GT(tv, band.lower * 0.9) << polygon_name(p);
  }
}

TEST(Occupancy, PointParticlesFactorize) {
  const Table t = make_table(PolygonId::Square, 0.0);
  const OccupancyGrid grid(t, 4);
  const std::vector<double> ref = reference_occupancy(t, grid, 0, 0);
  for (double x : ref) EXPECT_NEAR(x, 1.0 / 256.0, 1e-15);
}

TEST(Occupancy, CalibrationBandOfTwoBins) {
  // TV = |p_hat - 1/2|, approximately normal with sd 1 / (2 sqrt n)
  const std::vector<double> ref{0.5, 0.5};
  const double n = 10000.0;
  const CalibrationBand b = calibration_band(ref, n, 4000, 1);
  EXPECT_NEAR(b.upper, 2.576 * 0.5 / std::sqrt(n), 0.15 * 2.576 * 0.5 / std::sqrt(n));
  EXPECT_LT(b.lower, 1e-4);
  expect_code(ErrorCode::InvalidArgument, [&] { calibration_band(ref, 0.5, 10, 1); });
  expect_code(ErrorCode::InvalidArgument, [&] { total_variation(ref, {1.0}); });
  EXPECT_DOUBLE_EQ(total_variation({1.0, 0.0}, {0.0, 1.0}), 1.0);
}

TEST(Ergodicity, ShortEnsemble) {
  const Table t = make_table(PolygonId::EqTriangle, 0.1);
  ErgodicityOptions o;
  o.n_events = 100000;
  o.bins = 4;
  o.reference_samples = 2000000;
  o.calibration_draws = 100;
  const ErgodicityReport r = equidistribution_test(t, {1, 2, 3, 4, 5, 6}, o);
  double mass = 0.0;
  for (double x : r.occupancy) mass += x;
  EXPECT_NEAR(mass, 1.0, 1e-12);
  ASSERT_EQ(r.seed_tv.size(), 6u);
  for (double tv : r.seed_tv) {
    EXPECT_GE(tv, 0.0);
    EXPECT_LE(tv, 1.0);
  }
  EXPECT_TRUE(r.averages_agree(4.0));
  EXPECT_TRUE(r.trend_non_increasing());
  EXPECT_TRUE(r.tv_within_band());
  EXPECT_EQ(r.direction_dof, 15);
  EXPECT_EQ(r.direction_batches, 120u);
  const double f95 = boost::math::quantile(boost::math::fisher_f(15, 105), 0.95);
  EXPECT_NEAR(r.direction_critical, 15.0 * 119.0 / 105.0 * f95, 1e-12);
  const double f999 = boost::math::quantile(boost::math::fisher_f(15, 105), 0.999);
  EXPECT_LT(r.direction_stat, 15.0 * 119.0 / 105.0 * f999);
  ASSERT_EQ(r.observables.size(), 3u);
  EXPECT_NEAR(r.observables[0].mean, r.observables[0].liouville, 4e-3);
  EXPECT_EQ(r.trend_events.back(), o.n_events);
  EXPECT_EQ(ergodicity_csv_rows(r).size(), 18u);
  EXPECT_EQ(ergodicity_csv_header(), "seed,observable,average,stderr,final_tv");
  EXPECT_EQ(ergodicity_csv_rows(r), ergodicity_csv_rows(equidistribution_test(t, {1, 2, 3, 4, 5, 6}, o)));
  expect_code(ErrorCode::InvalidArgument, [&] { equidistribution_test(t, {1, 2, 3}, o); });
}
