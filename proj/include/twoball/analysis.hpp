#pragma once

// Statistical diagnostics: largest Lyapunov exponent, Birkhoff averages and
// equidistribution of the configuration against the Liouville measure.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "twoball/dynamics.hpp"
#include "twoball/table.hpp"

namespace twoball {

// ---------------------------------------------------------------------------
// Lyapunov exponent

enum class SeparationNorm { Phase, Velocity };

struct LyapunovOptions {
  std::size_t n_events = 100000;
  std::size_t renorm_every = 10;  // events between renormalizations
  double delta0 = 1e-9;
  std::size_t batches = 20;
  std::size_t max_restarts = 10;    // fresh initial conditions after singular halts
  double overflow = 1e-3;           // separation treated as saturated
  SeparationNorm norm = SeparationNorm::Phase;
};

struct LyapunovControl {
  double lambda = 0.0;
  double stderr_ = 0.0;
};

struct LyapunovReport {
  double lambda = 0.0;  // per unit time
  double stderr_ = 0.0;  // batch means
  std::size_t renormalizations = 0;
  double total_time = 0.0;
  std::size_t restarts = 0;  // singular halts
  std::vector<double> batch_lambdas;
  std::optional<LyapunovControl> control;  // one-ball run in the same polygon
};

/// Two-trajectory estimator. The shadow starts delta0 away in a random
/// direction tangent to the energy shell. Every renorm_every events both are
/// flowed to the midpoint of the current free flight of the main trajectory
/// and compared in the selected norm when their event counts agree.
/// Throws InvalidArgument (delta0 outside [1e-10, 1e-7], renorm_every < 10,
/// fewer than 2 batches), SequenceDivergenceOverflow (separation above
/// `overflow` or differing event sequences between renormalizations) and
/// SingularHalt after max_restarts restarts.
LyapunovReport lyapunov_estimate(const Table& table, std::uint64_t seed, const LyapunovOptions& opt = {});

/// Same estimator on the point-particle table (r = 0) of the polygon.
LyapunovControl lyapunov_control(PolygonId polygon, std::uint64_t seed, const LyapunovOptions& opt = {});

std::string lyapunov_csv_header();  // batch,lambda
std::vector<std::string> lyapunov_csv_rows(const LyapunovReport& r);

// ---------------------------------------------------------------------------
// Birkhoff averages

enum class ObservableKind { Constant, KineticShare, Separation, CellIndicator };

struct Observable {
  ObservableKind kind = ObservableKind::Constant;
  Vec2 lo, hi;  // CellIndicator: axis-aligned box holding ball 1
  std::string id() const;
};

/// kinetic share of ball 1, |q1 - q2|, and ball 1 in the central quarter of
/// the bounding box of P_r.
std::vector<Observable> builtin_observables(const Table& table);

double observable_value(const Observable& o, const PhaseState& s);

/// Exact integral of the observable over the free flight [s.t, s.t + dt].
double observable_integral(const Observable& o, const PhaseState& s, double dt);

/// Running time integral of a set of observables over consecutive free flights.
class BirkhoffAccumulator {
 public:
  explicit BirkhoffAccumulator(std::vector<Observable> obs) : obs_(std::move(obs)), sums_(obs_.size(), 0.0) {}
  void add(const PhaseState& s, double dt);
  double time() const { return time_; }
  double average(std::size_t i) const { return time_ > 0.0 ? sums_[i] / time_ : 0.0; }
  double integral(std::size_t i) const { return sums_[i]; }
  const std::vector<Observable>& observables() const { return obs_; }

 private:
  std::vector<Observable> obs_;
  std::vector<double> sums_;
  double time_ = 0.0;
};

/// Time average along the piecewise-linear flow of the trajectory.
double birkhoff_average(const Trajectory& traj, const Observable& o);

/// Mean of the observable under the Liouville measure, by sampling sample_state.
double liouville_mean(const Table& table, const Observable& o, std::size_t samples, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Equidistribution

/// Product grid over the bounding box of P_r for (q1, q2); bins per axis.
class OccupancyGrid {
 public:
  OccupancyGrid(const Table& table, int bins);
  int bins() const { return bins_; }
  std::size_t size() const { return static_cast<std::size_t>(bins_) * bins_ * bins_ * bins_; }
  std::size_t index(const std::array<Vec2, 2>& q) const;
  /// Adds the time spent in each bin during a free flight, splitting it at bin faces.
  void add_flight(std::vector<double>& hist, const PhaseState& s, double dt) const;
  Vec2 lo() const { return lo_; }
  Vec2 cell() const { return cell_; }

 private:
  int bins_;
  Vec2 lo_, cell_;
};

/// Liouville mass of each bin: products of exact polygon-box areas minus the
/// excluded pairs |q1 - q2| < R, the latter by Monte-Carlo.
std::vector<double> reference_occupancy(const Table& table, const OccupancyGrid& grid, std::size_t mc_samples,
                                        std::uint64_t seed);

double total_variation(const std::vector<double>& p, const std::vector<double>& q);

struct CalibrationBand {
  double n_eff = 0.0;
  double lower = 0.0;  // 1st percentile of TV for n_eff multinomial draws from the reference
  double upper = 0.0;  // 99th percentile
};

/// TV of multinomial samples of size n drawn from `reference`.
CalibrationBand calibration_band(const std::vector<double>& reference, double n_eff, std::size_t draws,
                                 std::uint64_t seed);

struct ObservableSummary {
  std::string id;
  std::vector<double> averages;  // per seed
  std::vector<double> stderrs;   // per seed, batch means
  double mean = 0.0;
  double dispersion = 0.0;  // sample standard deviation across seeds
  double liouville = 0.0;   // Monte-Carlo reference
  double max_z = 0.0;       // max over seeds of |a_s - mean of others| / combined error
};

struct ErgodicityOptions {
  std::size_t n_events = 1000000;
  int bins = 8;
  std::size_t batches = 20;
  std::size_t trend_points = 5;  // prefixes n/2^k, k = trend_points - 1 .. 0
  std::size_t reference_samples = 10000000;
  std::size_t calibration_draws = 400;
  int direction_bins = 16;
  double band_factor = 1.5;
  double agreement_z = 4.0;
};

struct ErgodicityReport {
  std::vector<std::uint64_t> seeds;
  std::size_t singular_halts = 0;  // seeds replaced by a fresh initial condition
  std::vector<ObservableSummary> observables;
  std::vector<double> occupancy;  // pooled over seeds, sums to 1
  std::vector<double> seed_tv;    // final TV per seed
  std::vector<std::size_t> trend_events;
  std::vector<double> trend_tv;  // mean over seeds of TV at each prefix
  CalibrationBand band;
  double band_factor = 1.5;
  // ball 1 velocity direction: Hotelling T^2 over all batches of all seeds,
  // tending to chi-square with direction_dof degrees of freedom
  double direction_stat = 0.0;
  int direction_dof = 0;
  std::size_t direction_batches = 0;
  double direction_critical = 0.0;  // 95%

  bool averages_agree(double z = 4.0) const;
  bool trend_non_increasing() const;
  bool tv_within_band() const;
  bool direction_uniform() const { return direction_stat <= direction_critical; }
};

/// Runs the seeds concurrently; throws InvalidArgument with fewer than 5 seeds.
ErgodicityReport equidistribution_test(const Table& table, const std::vector<std::uint64_t>& seeds,
                                       const ErgodicityOptions& opt = {});

std::string ergodicity_csv_header();  // seed,observable,average,stderr,final_tv
std::vector<std::string> ergodicity_csv_rows(const ErgodicityReport& r);
std::string ergodicity_trend_csv_header();  // events,mean_tv
std::vector<std::string> ergodicity_trend_csv_rows(const ErgodicityReport& r);

}  // namespace twoball
