#include "twoball/analysis.hpp"

#include <algorithm>
#include <Eigen/Dense>
#include <boost/math/distributions/fisher_f.hpp>
#include <cmath>
#include <cstdio>
#include <exception>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>
#include <thread>

#include "twoball/error.hpp"

namespace twoball {

namespace {

double mean_of(const std::vector<double>& x) {
  return x.empty() ? 0.0 : std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double sample_sd(const std::vector<double>& x) {
  if (x.size() < 2) return 0.0;
  const double m = mean_of(x);
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return std::sqrt(s / static_cast<double>(x.size() - 1));
}

std::string fmt17(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace

// ---------------------------------------------------------------------------
// Lyapunov exponent

namespace {

double separation(const PhaseState& a, const PhaseState& b, SeparationNorm n) {
  const double dv = norm2(a.v[0] - b.v[0]) + norm2(a.v[1] - b.v[1]);
  if (n == SeparationNorm::Velocity) return std::sqrt(dv);
  return std::sqrt(dv + norm2(a.q[0] - b.q[0]) + norm2(a.q[1] - b.q[1]));
}

PhaseState offset_state(const PhaseState& base, const PhaseState& other, double scale) {
  PhaseState s = base;
  for (int k = 0; k < 2; ++k) {
    s.q[k] += scale * (other.q[k] - base.q[k]);
    s.v[k] += scale * (other.v[k] - base.v[k]);
  }
  return s;
}

bool admissible(const Table& table, const PhaseState& s) {
  return table.contains(s.q[0]) && table.contains(s.q[1]) && norm(s.q[0] - s.q[1]) >= table.contact;
}

PhaseState shadow_of(const Table& table, const PhaseState& s, double delta0, SeparationNorm norm, Rng& rng) {
  std::normal_distribution<double> gauss;
  for (;;) {
    std::array<Vec2, 2> dq, dv;
    for (int k = 0; k < 2; ++k) {
      dq[k] = {gauss(rng), gauss(rng)};
      dv[k] = {gauss(rng), gauss(rng)};
    }
    // tangent to the energy shell
    const double along = dot(dv[0], s.v[0]) + dot(dv[1], s.v[1]);
    for (int k = 0; k < 2; ++k) dv[k] -= along * s.v[k];
    double len2 = norm2(dv[0]) + norm2(dv[1]);
    if (norm == SeparationNorm::Phase) len2 += norm2(dq[0]) + norm2(dq[1]);
    const double scale = delta0 / std::sqrt(len2);
    PhaseState out = s;
    for (int k = 0; k < 2; ++k) {
      out.q[k] += scale * dq[k];
      out.v[k] += scale * dv[k];
    }
    const double e = std::sqrt(out.energy() / s.energy());
    out.v[0] = out.v[0] / e;
    out.v[1] = out.v[1] / e;
    if (admissible(table, out)) return out;
  }
}

struct LyapunovRun {
  std::vector<double> logs;
  std::vector<double> spans;
  bool singular = false;
};

LyapunovRun lyapunov_run(const Table& table, Rng& rng, const LyapunovOptions& opt) {
  LyapunovRun run;
  const PhaseState s0 = sample_state(table, rng);
  Simulator a(table, s0);
  Simulator b(table, shadow_of(table, s0, opt.delta0, opt.norm, rng));
  double t_prev = 0.0;
  double d_start = separation(a.state(), b.state(), opt.norm);
  std::size_t a_since = 0, b_since = 0;
  while (a.event_count() < opt.n_events) {
    const EventRecord ea = a.step();
    if (ea.type == EventType::Singular) {
      run.singular = true;
      return run;
    }
    if (++a_since < opt.renorm_every) continue;
    // compare in the middle of the current free flight of the main trajectory
    const double t = 0.5 * (ea.time + a.next_event_time());
    while (b.next_event_time() <= t) {
      if (b.step().type == EventType::Singular) {
        run.singular = true;
        return run;
      }
      ++b_since;
    }
    a.flow_to(t);
    b.flow_to(t);
    // a transient excursion (the two runs straddling an event or a corner) is
    // skipped; saturation means no valid comparison for two more windows
    const double d = a_since == b_since ? separation(a.state(), b.state(), opt.norm)
                                        : std::numeric_limits<double>::infinity();
    if (!(d <= opt.overflow)) {
      if (a_since >= 3 * opt.renorm_every) {
        char buf[128];
        std::snprintf(buf, sizeof buf, "separation %.3g exceeds %.3g between renormalizations", d, opt.overflow);
        throw Error(ErrorCode::SequenceDivergenceOverflow, buf);
      }
      continue;
    }
    if (d > 0.0) {
      // growth is measured from the separation actually realized after rounding
      run.logs.push_back(std::log(d / d_start));
      run.spans.push_back(t - t_prev);
      t_prev = t;
      b = Simulator(table, offset_state(a.state(), b.state(), opt.delta0 / d));
      d_start = separation(a.state(), b.state(), opt.norm);
    }
    a_since = b_since = 0;
  }
  return run;
}

}  // namespace

LyapunovReport lyapunov_estimate(const Table& table, std::uint64_t seed, const LyapunovOptions& opt) {
  if (!(opt.delta0 >= 1e-10 && opt.delta0 <= 1e-7)) {
    throw Error(ErrorCode::InvalidArgument, "delta0 must lie in [1e-10, 1e-7]");
  }
  if (opt.renorm_every < 10) throw Error(ErrorCode::InvalidArgument, "renorm_every must be at least 10 events");
  if (opt.batches < 2) throw Error(ErrorCode::InvalidArgument, "at least two batches are needed");

  LyapunovReport rep;
  Rng rng(seed);
  LyapunovRun run = lyapunov_run(table, rng, opt);
  while (run.singular) {
    if (++rep.restarts > opt.max_restarts) {
      throw Error(ErrorCode::SingularHalt, "singular events in every restart");
    }
    run = lyapunov_run(table, rng, opt);
  }
  const std::size_t m = run.logs.size();
  if (m < opt.batches) throw Error(ErrorCode::InvalidArgument, "fewer renormalizations than batches");
  rep.renormalizations = m;
  rep.total_time = std::accumulate(run.spans.begin(), run.spans.end(), 0.0);
  rep.lambda = std::accumulate(run.logs.begin(), run.logs.end(), 0.0) / rep.total_time;
  for (std::size_t b = 0; b < opt.batches; ++b) {
    const std::size_t i0 = b * m / opt.batches, i1 = (b + 1) * m / opt.batches;
    double s = 0.0, t = 0.0;
    for (std::size_t i = i0; i < i1; ++i) {
      s += run.logs[i];
      t += run.spans[i];
    }
    rep.batch_lambdas.push_back(s / t);
  }
  rep.stderr_ = sample_sd(rep.batch_lambdas) / std::sqrt(static_cast<double>(opt.batches));
  return rep;
}

LyapunovControl lyapunov_control(PolygonId polygon, std::uint64_t seed, const LyapunovOptions& opt) {
  const LyapunovReport r = lyapunov_estimate(make_table(polygon, 0.0), seed, opt);
  return {r.lambda, r.stderr_};
}

std::string lyapunov_csv_header() { return "batch,lambda"; }

std::vector<std::string> lyapunov_csv_rows(const LyapunovReport& r) {
  std::vector<std::string> rows;
  for (std::size_t i = 0; i < r.batch_lambdas.size(); ++i) {
    rows.push_back(std::to_string(i) + "," + fmt17(r.batch_lambdas[i]));
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Birkhoff averages

std::string Observable::id() const {
  switch (kind) {
    case ObservableKind::Constant: return "constant";
    case ObservableKind::KineticShare: return "kinetic_share";
    case ObservableKind::Separation: return "separation";
    case ObservableKind::CellIndicator: return "cell";
  }
  return "?";
}

std::vector<Observable> builtin_observables(const Table& table) {
  Vec2 lo = table.eroded_vertices.front(), hi = lo;
  for (Vec2 v : table.eroded_vertices) {
    lo = {std::min(lo.x, v.x), std::min(lo.y, v.y)};
    hi = {std::max(hi.x, v.x), std::max(hi.y, v.y)};
  }
  const Vec2 c = 0.5 * (lo + hi), h = 0.25 * (hi - lo);
  Observable cell{ObservableKind::CellIndicator, c - h, c + h};
  return {Observable{ObservableKind::KineticShare, {}, {}}, Observable{ObservableKind::Separation, {}, {}}, cell};
}

double observable_value(const Observable& o, const PhaseState& s) {
  switch (o.kind) {
    case ObservableKind::Constant: return 1.0;
    case ObservableKind::KineticShare: return norm2(s.v[0]) / s.energy();
    case ObservableKind::Separation: return norm(s.q[0] - s.q[1]);
    case ObservableKind::CellIndicator:
      return s.q[0].x >= o.lo.x && s.q[0].x <= o.hi.x && s.q[0].y >= o.lo.y && s.q[0].y <= o.hi.y ? 1.0 : 0.0;
  }
  return 0.0;
}

namespace {

// integral over [0, T] of |a + t b|
double linear_norm_integral(Vec2 a, Vec2 b, double T) {
  const double s = norm(b);
  if (s * T <= 1e-15 * norm(a)) return norm(a) * T;
  const double p = dot(a, b) / s;
  const double h = std::abs(cross(a, b)) / s;
  auto F = [h](double x) {
    const double r = std::hypot(x, h);
    return 0.5 * (x * r + (h > 0.0 ? h * h * std::asinh(x / h) : 0.0));
  };
  return (F(p + s * T) - F(p)) / s;
}

// length of {t in [0, T] : lo <= x + t v <= hi}
void clip_interval(double x, double v, double lo, double hi, double& t0, double& t1) {
  if (v == 0.0) {
    if (x < lo || x > hi) t1 = t0;
    return;
  }
  double a = (lo - x) / v, b = (hi - x) / v;
  if (a > b) std::swap(a, b);
  t0 = std::max(t0, a);
  t1 = std::min(t1, b);
}

}  // namespace

double observable_integral(const Observable& o, const PhaseState& s, double dt) {
  switch (o.kind) {
    case ObservableKind::Constant: return dt;
    case ObservableKind::KineticShare: return dt * norm2(s.v[0]) / s.energy();
    case ObservableKind::Separation: return linear_norm_integral(s.q[0] - s.q[1], s.v[0] - s.v[1], dt);
    case ObservableKind::CellIndicator: {
      double t0 = 0.0, t1 = dt;
      clip_interval(s.q[0].x, s.v[0].x, o.lo.x, o.hi.x, t0, t1);
      clip_interval(s.q[0].y, s.v[0].y, o.lo.y, o.hi.y, t0, t1);
      return std::max(0.0, t1 - t0);
    }
  }
  return 0.0;
}

void BirkhoffAccumulator::add(const PhaseState& s, double dt) {
  if (dt <= 0.0) return;
  for (std::size_t i = 0; i < obs_.size(); ++i) sums_[i] += observable_integral(obs_[i], s, dt);
  time_ += dt;
}

double birkhoff_average(const Trajectory& traj, const Observable& o) {
  BirkhoffAccumulator acc({o});
  PhaseState prev = traj.initial;
  for (const EventRecord& e : traj.events) {
    if (e.type == EventType::Singular) break;
    acc.add(prev, e.time - prev.t);
    prev = e.post;
  }
  if (traj.final_state.t > prev.t) acc.add(prev, traj.final_state.t - prev.t);
  return acc.average(0);
}

double liouville_mean(const Table& table, const Observable& o, std::size_t samples, std::uint64_t seed) {
  Rng rng(seed);
  double s = 0.0;
  for (std::size_t i = 0; i < samples; ++i) s += observable_value(o, sample_state(table, rng));
  return s / static_cast<double>(samples);
}

// ---------------------------------------------------------------------------
// Equidistribution

OccupancyGrid::OccupancyGrid(const Table& table, int bins) : bins_(bins) {
  if (bins < 1) throw Error(ErrorCode::InvalidArgument, "at least one bin per axis");
  Vec2 lo = table.eroded_vertices.front(), hi = lo;
  for (Vec2 v : table.eroded_vertices) {
    lo = {std::min(lo.x, v.x), std::min(lo.y, v.y)};
    hi = {std::max(hi.x, v.x), std::max(hi.y, v.y)};
  }
  lo_ = lo;
  cell_ = (hi - lo) / static_cast<double>(bins);
}

namespace {

int axis_bin(double x, double lo, double cell, int bins) {
  return std::clamp(static_cast<int>(std::floor((x - lo) / cell)), 0, bins - 1);
}

}  // namespace

std::size_t OccupancyGrid::index(const std::array<Vec2, 2>& q) const {
  std::size_t idx = 0;
  for (int k = 0; k < 2; ++k) {
    idx = idx * bins_ + axis_bin(q[k].x, lo_.x, cell_.x, bins_);
    idx = idx * bins_ + axis_bin(q[k].y, lo_.y, cell_.y, bins_);
  }
  return idx;
}

void OccupancyGrid::add_flight(std::vector<double>& hist, const PhaseState& s, double dt) const {
  if (dt <= 0.0) return;
  std::vector<double> cuts{0.0, dt};
  auto faces = [&](double x, double v, double lo, double cell) {
    if (v == 0.0) return;
    const double u0 = (x - lo) / cell, u1 = (x + dt * v - lo) / cell;
    for (double m = std::ceil(std::min(u0, u1)); m <= std::floor(std::max(u0, u1)); m += 1.0) {
      const double t = (lo + m * cell - x) / v;
      if (t > 0.0 && t < dt) cuts.push_back(t);
    }
  };
  for (int k = 0; k < 2; ++k) {
    faces(s.q[k].x, s.v[k].x, lo_.x, cell_.x);
    faces(s.q[k].y, s.v[k].y, lo_.y, cell_.y);
  }
  std::sort(cuts.begin(), cuts.end());
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double len = cuts[i + 1] - cuts[i];
    if (len <= 0.0) continue;
    const double tm = 0.5 * (cuts[i] + cuts[i + 1]);
    hist[index({s.q[0] + tm * s.v[0], s.q[1] + tm * s.v[1]})] += len;
  }
}

namespace {

double shoelace(const std::vector<Vec2>& v) {
  double a = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) a += cross(v[i], v[(i + 1) % v.size()]);
  return 0.5 * std::abs(a);
}

// Sutherland-Hodgman against one half-plane {p : dot(n, p) <= c}
std::vector<Vec2> clip_half(const std::vector<Vec2>& poly, Vec2 n, double c) {
  std::vector<Vec2> out;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Vec2 p = poly[i], q = poly[(i + 1) % poly.size()];
    const double dp = dot(n, p) - c, dq = dot(n, q) - c;
    if (dp <= 0.0) out.push_back(p);
    if ((dp < 0.0 && dq > 0.0) || (dp > 0.0 && dq < 0.0)) out.push_back(p + (dp / (dp - dq)) * (q - p));
  }
  return out;
}

double box_area(const std::vector<Vec2>& poly, Vec2 lo, Vec2 hi) {
  std::vector<Vec2> p = clip_half(poly, {1, 0}, hi.x);
  p = clip_half(p, {-1, 0}, -lo.x);
  p = clip_half(p, {0, 1}, hi.y);
  p = clip_half(p, {0, -1}, -lo.y);
  return p.size() < 3 ? 0.0 : shoelace(p);
}

}  // namespace

std::vector<double> reference_occupancy(const Table& table, const OccupancyGrid& grid, std::size_t mc_samples,
                                        std::uint64_t seed) {
  const int n = grid.bins();
  const std::size_t cells = static_cast<std::size_t>(n) * n;
  std::vector<double> area(cells);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const Vec2 lo{grid.lo().x + i * grid.cell().x, grid.lo().y + j * grid.cell().y};
      area[static_cast<std::size_t>(i) * n + j] = box_area(table.eroded_vertices, lo, lo + grid.cell());
    }
  }
  std::vector<double> ref(grid.size());
  for (std::size_t a = 0; a < cells; ++a) {
    for (std::size_t b = 0; b < cells; ++b) ref[a * cells + b] = area[a] * area[b];
  }
  const double R = table.contact;
  if (R > 0.0 && mc_samples > 0) {
    Rng rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double w = table.eroded_area() * std::numbers::pi * R * R / static_cast<double>(mc_samples);
    for (std::size_t i = 0; i < mc_samples; ++i) {
      const Vec2 q1 = sample_point(table, rng);
      const double rho = R * std::sqrt(unit(rng)), th = 2.0 * std::numbers::pi * unit(rng);
      const Vec2 q2 = q1 + Vec2{rho * std::cos(th), rho * std::sin(th)};
      if (!table.contains(q2)) continue;
      ref[grid.index({q1, q2})] -= w;
    }
  }
  double z = 0.0;
  for (double& x : ref) {
    x = std::max(x, 0.0);
    z += x;
  }
  for (double& x : ref) x /= z;
  return ref;
}

double total_variation(const std::vector<double>& p, const std::vector<double>& q) {
  if (p.size() != q.size()) throw Error(ErrorCode::InvalidArgument, "histograms of different sizes");
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) s += std::abs(p[i] - q[i]);
  return 0.5 * s;
}

CalibrationBand calibration_band(const std::vector<double>& reference, double n_eff, std::size_t draws,
                                 std::uint64_t seed) {
  if (!(n_eff >= 1.0) || draws < 2) throw Error(ErrorCode::InvalidArgument, "calibration needs n_eff >= 1 and 2 draws");
  Rng rng(seed);
  const auto n = static_cast<long long>(std::llround(n_eff));
  std::vector<double> tv;
  std::vector<double> hist(reference.size());
  for (std::size_t d = 0; d < draws; ++d) {
    long long left = n;
    double mass = 1.0;
    for (std::size_t i = 0; i < reference.size(); ++i) {
      long long k = 0;
      if (left > 0 && reference[i] > 0.0) {
        const double p = std::min(1.0, reference[i] / mass);
        k = p >= 1.0 ? left : std::binomial_distribution<long long>(left, p)(rng);
      }
      hist[i] = static_cast<double>(k) / static_cast<double>(n);
      left -= k;
      mass -= reference[i];
    }
    tv.push_back(total_variation(hist, reference));
  }
  std::sort(tv.begin(), tv.end());
  auto quantile = [&](double q) { return tv[static_cast<std::size_t>(std::floor(q * (tv.size() - 1)))]; };
  return {n_eff, quantile(0.01), quantile(0.99)};
}

namespace {

struct SeedRun {
  std::size_t halts = 0;
  std::vector<std::vector<double>> batch_avgs;   // [observable][batch]
  std::vector<std::vector<double>> snapshots;    // occupancy at each trend prefix, normalized
  std::vector<std::vector<double>> directions;   // per batch, normalized
};

double angle_of(Vec2 v) {
  const double a = std::atan2(v.y, v.x);
  return a < 0.0 ? a + 2.0 * std::numbers::pi : a;
}

SeedRun run_seed(const Table& table, const OccupancyGrid& grid, const std::vector<Observable>& obs,
                 std::uint64_t seed, const ErgodicityOptions& opt, const std::vector<std::size_t>& prefixes) {
  SeedRun out;
  Rng rng(seed);
  const int nd = opt.direction_bins;
  for (;;) {
    out.batch_avgs.assign(obs.size(), {});
    out.snapshots.clear();
    std::vector<double> hist(grid.size(), 0.0), dirs(static_cast<std::size_t>(nd), 0.0);
    BirkhoffAccumulator batch(obs);
    std::size_t next_prefix = 0, count = 0, next_batch = 1;
    bool singular = false;
    PhaseState prev = sample_state(table, rng);
    out.directions.clear();
    auto flush_batch = [&] {
      for (std::size_t i = 0; i < obs.size(); ++i) out.batch_avgs[i].push_back(batch.average(i));
      const double z = std::accumulate(dirs.begin(), dirs.end(), 0.0);
      for (double& x : dirs) x /= z;
      out.directions.push_back(dirs);
      std::fill(dirs.begin(), dirs.end(), 0.0);
      batch = BirkhoffAccumulator(obs);
    };
    simulate(table, prev, Budget{.events = opt.n_events, .max_time = {}}, [&](const EventRecord& e) {
      if (singular) return;
      if (e.type == EventType::Singular) {
        singular = true;
        return;
      }
      const double dt = e.time - prev.t;
      batch.add(prev, dt);
      grid.add_flight(hist, prev, dt);
      const double a = angle_of(prev.v[0]);
      dirs[std::min<std::size_t>(static_cast<std::size_t>(a / (2.0 * std::numbers::pi) * nd), nd - 1)] += dt;
      prev = e.post;
      ++count;
      if (count == next_batch * opt.n_events / opt.batches) {
        flush_batch();
        ++next_batch;
      }
      if (next_prefix < prefixes.size() && count == prefixes[next_prefix]) {
        std::vector<double> snap = hist;
        const double z = std::accumulate(snap.begin(), snap.end(), 0.0);
        for (double& x : snap) x /= z;
        out.snapshots.push_back(std::move(snap));
        ++next_prefix;
      }
    });
    if (singular || count < opt.n_events) {
      ++out.halts;
      if (out.halts > 10) throw Error(ErrorCode::SingularHalt, "singular events in every restart");
      continue;
    }
    return out;
  }
}

// Effective sample size of normalized histograms from their dispersion across seeds.
double effective_size(const std::vector<std::vector<double>>& hists, const std::vector<double>& pooled) {
  const double s = static_cast<double>(hists.size());
  double var = 0.0, binom = 0.0;
  for (std::size_t i = 0; i < pooled.size(); ++i) {
    double v = 0.0;
    for (const auto& h : hists) v += (h[i] - pooled[i]) * (h[i] - pooled[i]);
    var += v / (s - 1.0);
    binom += pooled[i] * (1.0 - pooled[i]);
  }
  return var > 0.0 ? binom / var : std::numeric_limits<double>::infinity();
}

std::vector<double> pool(const std::vector<std::vector<double>>& hists) {
  std::vector<double> p(hists.front().size(), 0.0);
  for (const auto& h : hists) {
    for (std::size_t i = 0; i < p.size(); ++i) p[i] += h[i];
  }
  for (double& x : p) x /= static_cast<double>(hists.size());
  return p;
}

}  // namespace

ErgodicityReport equidistribution_test(const Table& table, const std::vector<std::uint64_t>& seeds,
                                       const ErgodicityOptions& opt) {
  if (seeds.size() < 5) throw Error(ErrorCode::InvalidArgument, "equidistribution needs at least 5 seeds");
  if (opt.batches < 2 || opt.n_events < opt.batches || opt.trend_points < 1 || opt.direction_bins < 2) {
    throw Error(ErrorCode::InvalidArgument, "invalid ergodicity options");
  }
  ErgodicityReport rep;
  rep.seeds = seeds;
  rep.band_factor = opt.band_factor;
  const OccupancyGrid grid(table, opt.bins);
  const std::vector<Observable> obs = builtin_observables(table);
  for (std::size_t k = opt.trend_points; k-- > 0;) rep.trend_events.push_back(opt.n_events >> k);

  std::vector<SeedRun> runs(seeds.size());
  std::vector<std::exception_ptr> errors(seeds.size());
  {
    std::vector<std::thread> pool_threads;
    for (std::size_t s = 0; s < seeds.size(); ++s) {
      pool_threads.emplace_back([&, s] {
        try {
          runs[s] = run_seed(table, grid, obs, seeds[s], opt, rep.trend_events);
        } catch (...) {
          errors[s] = std::current_exception();
        }
      });
    }
    for (auto& t : pool_threads) t.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  for (const SeedRun& r : runs) rep.singular_halts += r.halts;

  // Birkhoff averages; the per-seed average is the mean of equal-event batches
  const double sqrt_b = std::sqrt(static_cast<double>(opt.batches));
  for (std::size_t i = 0; i < obs.size(); ++i) {
    ObservableSummary sum;
    sum.id = obs[i].id();
    for (const SeedRun& r : runs) {
      sum.averages.push_back(mean_of(r.batch_avgs[i]));
      sum.stderrs.push_back(sample_sd(r.batch_avgs[i]) / sqrt_b);
    }
    sum.mean = mean_of(sum.averages);
    sum.dispersion = sample_sd(sum.averages);
    sum.liouville = liouville_mean(table, obs[i], 200000, 0x5eed + i);
    const double n = static_cast<double>(runs.size());
    for (std::size_t s = 0; s < runs.size(); ++s) {
      double others = 0.0, var_others = 0.0;
      for (std::size_t t = 0; t < runs.size(); ++t) {
        if (t == s) continue;
        others += sum.averages[t];
        var_others += sum.stderrs[t] * sum.stderrs[t];
      }
      others /= n - 1.0;
      var_others /= (n - 1.0) * (n - 1.0);
      const double err = std::sqrt(sum.stderrs[s] * sum.stderrs[s] + var_others);
      sum.max_z = std::max(sum.max_z, std::abs(sum.averages[s] - others) / err);
    }
    rep.observables.push_back(std::move(sum));
  }

  // occupancy
  const std::vector<double> ref = reference_occupancy(table, grid, opt.reference_samples, 0xa11ce);
  std::vector<std::vector<double>> finals;
  for (const SeedRun& r : runs) finals.push_back(r.snapshots.back());
  rep.occupancy = pool(finals);
  for (const auto& h : finals) rep.seed_tv.push_back(total_variation(h, ref));
  for (std::size_t k = 0; k < rep.trend_events.size(); ++k) {
    double tv = 0.0;
    for (const SeedRun& r : runs) tv += total_variation(r.snapshots[k], ref);
    rep.trend_tv.push_back(tv / static_cast<double>(runs.size()));
  }
  rep.band = calibration_band(ref, effective_size(finals, rep.occupancy), opt.calibration_draws, 0xba4d);

  // velocity direction of ball 1: Hotelling T^2 of the batch histograms
  // (last bin dropped) against the uniform distribution
  const int k = opt.direction_bins - 1;
  std::vector<Eigen::VectorXd> xs;
  for (const SeedRun& r : runs) {
    for (const auto& h : r.directions) xs.push_back(Eigen::Map<const Eigen::VectorXd>(h.data(), k));
  }
  const double m = static_cast<double>(xs.size());
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(k);
  for (const auto& x : xs) mean += x;
  mean /= m;
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(k, k);
  for (const auto& x : xs) cov += (x - mean) * (x - mean).transpose();
  cov /= m - 1.0;
  const Eigen::VectorXd d = mean - Eigen::VectorXd::Constant(k, 1.0 / opt.direction_bins);
  rep.direction_stat = m * d.dot(cov.ldlt().solve(d));
  rep.direction_dof = k;
  rep.direction_batches = xs.size();
  if (m > k + 1) {
    const double f = boost::math::quantile(boost::math::fisher_f(k, m - k), 0.95);
    rep.direction_critical = k * (m - 1.0) / (m - k) * f;
  }
  return rep;
}

bool ErgodicityReport::averages_agree(double z) const {
  return std::all_of(observables.begin(), observables.end(), [z](const ObservableSummary& s) { return s.max_z <= z; });
}

bool ErgodicityReport::trend_non_increasing() const {
  for (std::size_t i = 0; i + 1 < trend_tv.size(); ++i) {
    if (trend_tv[i + 1] > trend_tv[i]) return false;
  }
  return true;
}

bool ErgodicityReport::tv_within_band() const {
  return std::all_of(seed_tv.begin(), seed_tv.end(), [&](double tv) { return tv <= band.upper * band_factor; });
}

std::string ergodicity_csv_header() { return "seed,observable,average,stderr,final_tv"; }

std::vector<std::string> ergodicity_csv_rows(const ErgodicityReport& r) {
  std::vector<std::string> rows;
  for (std::size_t s = 0; s < r.seeds.size(); ++s) {
    for (const ObservableSummary& o : r.observables) {
      rows.push_back(std::to_string(r.seeds[s]) + "," + o.id + "," + fmt17(o.averages[s]) + "," +
                     fmt17(o.stderrs[s]) + "," + fmt17(r.seed_tv[s]));
    }
  }
  return rows;
}

std::string ergodicity_trend_csv_header() { return "events,mean_tv"; }

std::vector<std::string> ergodicity_trend_csv_rows(const ErgodicityReport& r) {
  std::vector<std::string> rows;
  for (std::size_t k = 0; k < r.trend_events.size(); ++k) {
    rows.push_back(std::to_string(r.trend_events[k]) + "," + fmt17(r.trend_tv[k]));
  }
  return rows;
}

}  // namespace twoball
