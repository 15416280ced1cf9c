#include "twoball/sufficiency.hpp"

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>

#include "mp_flow.hpp"
#include "twoball/error.hpp"

namespace twoball {

NeutralSystem build_neutral_system(const ShortSeq& seq, NeutralOptions opt) {
  const std::size_t k = seq.islands.size();
  if (k == 0) throw Error(ErrorCode::InvalidArgument, "empty short sequence");
  NeutralSystem sys;
  sys.islands = k;
  sys.junction_rows = 4 * (k - 1);
  const std::size_t extra = opt.equal_advances ? k - 1 : 0;
  sys.matrix = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(sys.junction_rows + extra),
                                     static_cast<Eigen::Index>(3 * k));
  for (std::size_t j = 0; j + 1 < k; ++j) {
    const auto& entry = seq.islands[j + 1].entry;
    if (!entry) throw Error(ErrorCode::MissingVelocities, "island without entry velocities");
    const Eigen::Index cj = static_cast<Eigen::Index>(3 * j), cn = cj + 3;
    for (int ball = 0; ball < 2; ++ball) {
      const Mat2 m = seq.junctions[j].g[ball].matrix() * seq.islands[j].s.matrix();
      const Vec2 v = (*entry)[ball];
      const Eigen::Index r = static_cast<Eigen::Index>(4 * j + 2 * ball);
      // m n_j - n_{j+1} + alpha_j v - alpha_{j+1} v = 0
      sys.matrix(r, cj) = m.a;
      sys.matrix(r, cj + 1) = m.b;
      sys.matrix(r + 1, cj) = m.c;
      sys.matrix(r + 1, cj + 1) = m.d;
      sys.matrix(r, cn) = -1.0;
      sys.matrix(r + 1, cn + 1) = -1.0;
      sys.matrix(r, cj + 2) = v.x;
      sys.matrix(r + 1, cj + 2) = v.y;
      sys.matrix(r, cn + 2) = -v.x;
      sys.matrix(r + 1, cn + 2) = -v.y;
    }
    if (opt.equal_advances) {
      const Eigen::Index r = static_cast<Eigen::Index>(sys.junction_rows + j);
      sys.matrix(r, cj + 2) = 1.0;
      sys.matrix(r, cn + 2) = -1.0;
    }
  }
  return sys;
}

NeutralAnalysis analyze_neutral(const NeutralSystem& sys, double tol) {
  NeutralAnalysis out;
  const Eigen::Index n = sys.matrix.cols();
  out.singular_values = Eigen::VectorXd::Zero(n);
  if (sys.matrix.rows() == 0) {
    out.nullity = static_cast<int>(n);
    out.gap_ratio = std::numeric_limits<double>::infinity();
    out.null_basis = Eigen::MatrixXd::Identity(n, n);
    return out;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(sys.matrix, Eigen::ComputeFullV);
  const Eigen::VectorXd& sv = svd.singularValues();
  out.singular_values.head(sv.size()) = sv;
  const double thr = tol * out.singular_values(0);
  int rank = 0;
  double upper = std::numeric_limits<double>::infinity(), lower = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double s = out.singular_values(i);
    if (s >= thr && s > 0.0) {
      ++rank;
      upper = std::min(upper, s);
    } else {
      lower = std::max(lower, s);
    }
  }
  out.nullity = static_cast<int>(n) - rank;
  const double above = thr > 0.0 ? upper / thr : std::numeric_limits<double>::infinity();
  const double below = lower > 0.0 ? thr / lower : std::numeric_limits<double>::infinity();
  out.gap_ratio = std::min(above, below);
  out.null_basis = svd.matrixV().rightCols(out.nullity);
  return out;
}

int neutral_dimension(const NeutralSystem& sys, double tol) {
  const NeutralAnalysis a = analyze_neutral(sys, tol);
  if (a.ill_conditioned()) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "singular values cluster at the threshold (gap ratio %.3g)", a.gap_ratio);
    throw Error(ErrorCode::IllConditioned, buf);
  }
  return a.nullity;
}

std::string_view sufficiency_name(SufficiencyKind k) {
  switch (k) {
    case SufficiencyKind::Sufficient: return "Sufficient";
    case SufficiencyKind::NotSufficient: return "NotSufficient";
    case SufficiencyKind::Degenerate: return "Degenerate";
  }
  return "?";
}

namespace {

SufficiencyVerdict verdict_of(const NeutralAnalysis& a) {
  SufficiencyVerdict v;
  v.dim = a.nullity;
  v.gap_ratio = a.gap_ratio;
  if (a.ill_conditioned()) {
    v.kind = SufficiencyKind::Degenerate;
  } else {
    v.kind = a.nullity == 1 ? SufficiencyKind::Sufficient : SufficiencyKind::NotSufficient;
  }
  return v;
}

}  // namespace

SufficiencyVerdict is_sufficient(const ShortSeq& seq, NeutralOptions opt) {
  if (seq.islands.size() < 2) throw Error(ErrorCode::TooShort, "sufficiency needs at least two islands");
  return verdict_of(analyze_neutral(build_neutral_system(seq, opt)));
}

bool degeneracy_check(Vec2 v1, Vec2 v2, Vec2 e) {
  const Vec2 d = v1 - v2;
  const double nd = norm(d);
  if (nd <= 1e-10) throw Error(ErrorCode::DegenerateRelativeVelocity, "equal velocities");
  return std::abs(cross(d, e)) < 1e-9 * nd;
}

ShortSeq short_window(const ShortSeq& seq, std::size_t first, std::size_t count) {
  if (count == 0 || first + count > seq.islands.size()) {
    throw Error(ErrorCode::InvalidArgument, "window outside the short sequence");
  }
  ShortSeq w;
  w.order_n = seq.order_n;
  w.islands.assign(seq.islands.begin() + first, seq.islands.begin() + first + count);
  w.junctions.assign(seq.junctions.begin() + first, seq.junctions.begin() + first + count - 1);
  return w;
}

namespace {

bool same_event(const EventRecord& a, const EventRecord& b) {
  return a.type == b.type && a.ball == b.ball && a.side_id == b.side_id;
}

std::vector<EventRecord> rerun(const Table& table, const PhaseState& start, const std::vector<EventRecord>& pattern) {
  std::vector<EventRecord> out;
  out.reserve(pattern.size());
  Simulator sim(table, start);
  for (const EventRecord& want : pattern) {
    if (sim.halted()) throw Error(ErrorCode::SequenceChanged, "perturbed run halted at a singular event");
    EventRecord e = sim.step();
    if (!same_event(e, want)) {
      throw Error(ErrorCode::SequenceChanged, "event " + std::to_string(out.size()) + " differs");
    }
    out.push_back(e);
  }
  return out;
}

// Finite differences are taken in extended precision: chaotic amplification
// of double rounding across a few collisions would otherwise swamp the
// second-order term.
using Real = boost::multiprecision::number<boost::multiprecision::cpp_bin_float<60>,
                                           boost::multiprecision::et_off>;

struct MpRun {
  std::vector<Real> times;
  std::array<mp::V<Real>, 2> v_end;
};

MpRun mp_run(const Table& table, const Segment& seg, const Perturbation& w, double delta) {
  const mp::Flow<Real> flow(table);
  const Real d(delta);
  mp::State<Real> s;
  for (int k = 0; k < 2; ++k) {
    s.q[k] = {Real(seg.start.q[k].x) + d * Real(w[k].x), Real(seg.start.q[k].y) + d * Real(w[k].y)};
    s.v[k] = {Real(seg.start.v[k].x), Real(seg.start.v[k].y)};
  }
  MpRun run;
  run.times.reserve(seg.events.size());
  Real t = 0;
  for (const EventRecord& want : seg.events) {
    const auto e = flow.next(s);
    const bool same = e && (want.type == EventType::BallBall
                                ? e->kind == 1
                                : want.type == EventType::WallHit && e->kind == 0 && e->ball == want.ball &&
                                      e->wall == want.side_id);
    if (!same) throw Error(ErrorCode::SequenceChanged, "event " + std::to_string(run.times.size()) + " differs");
    mp::Flow<Real>::advance(s, e->dt);
    t += e->dt;
    flow.apply(s, *e);
    run.times.push_back(t);
  }
  run.v_end = s.v;
  return run;
}

}  // namespace

Segment extract_segment(const Table& table, const Trajectory& traj, std::size_t first_event,
                        std::size_t last_event) {
  if (first_event > last_event || last_event >= traj.events.size() ||
      traj.events[first_event].type != EventType::BallBall || traj.events[last_event].type != EventType::BallBall) {
    throw Error(ErrorCode::InvalidArgument, "segment must start and end with disk-disk collisions");
  }
  const PhaseState& prev = first_event == 0 ? traj.initial : traj.events[first_event - 1].post;
  Segment seg;
  seg.start = prev.advanced(0.5 * (traj.events[first_event].time - prev.t));
  seg.start.t = 0.0;
  const std::vector<EventRecord> pattern(traj.events.begin() + first_event, traj.events.begin() + last_event + 1);
  seg.events = rerun(table, seg.start, pattern);
  if (first_event == last_event) {
    seg.long_seq.order_n = table.group.order_n();
    const EventRecord& e = seg.events.front();
    seg.long_seq.collisions.push_back({0, e.time, seg.start.v, e.post.v, e.post});
  } else {
    seg.long_seq = long_sequence(seg.start, seg.events);
  }
  seg.short_seq = compress_to_short(seg.long_seq);
  return seg;
}

Perturbation perturbation_from_null(const Segment& seg, const Eigen::VectorXd& x) {
  const Vec2 n{x(0), x(1)};
  const double alpha = x(2);
  return {n + alpha * seg.start.v[0], n + alpha * seg.start.v[1]};
}

std::vector<double> measure_advances(const Table& table, const Segment& seg, const Perturbation& w, double delta) {
  const auto& cols = seg.long_seq.collisions;
  const MpRun base = mp_run(table, seg, {Vec2{}, Vec2{}}, 0.0);
  const MpRun full = mp_run(table, seg, w, delta), half = mp_run(table, seg, w, 0.5 * delta);
  std::vector<double> out(cols.size());
  for (std::size_t c = 0; c < cols.size(); ++c) {
    const std::size_t i = cols[c].event_index;
    const Real a1 = (base.times[i] - full.times[i]) / Real(delta);
    const Real a2 = (base.times[i] - half.times[i]) / Real(0.5 * delta);
    out[c] = static_cast<double>(Real(2) * a2 - a1);
  }
  return out;
}

AdvanceMeasurement measure_advance(const Table& table, const Segment& seg, std::size_t collision,
                                   const Perturbation& w, double delta) {
  if (collision >= seg.long_seq.collisions.size()) {
    throw Error(ErrorCode::InvalidArgument, "collision index outside the segment");
  }
  const std::size_t i = seg.long_seq.collisions[collision].event_index;
  const MpRun base = mp_run(table, seg, {Vec2{}, Vec2{}}, 0.0);
  const Real a1 = (base.times[i] - mp_run(table, seg, w, delta).times[i]) / Real(delta);
  const Real a2 = (base.times[i] - mp_run(table, seg, w, 0.5 * delta).times[i]) / Real(0.5 * delta);
  using boost::multiprecision::abs;
  return {collision, w, delta, static_cast<double>(Real(2) * a2 - a1), static_cast<double>(abs(a1 - a2))};
}

double EndpointDeviation::order() const {
  if (half <= 0.0) return std::numeric_limits<double>::infinity();
  return std::log2(full / half);
}

EndpointDeviation endpoint_velocity_deviation(const Table& table, const Segment& seg, const Perturbation& w,
                                              double delta) {
  const MpRun base = mp_run(table, seg, {Vec2{}, Vec2{}}, 0.0);
  auto dev = [&](double d) {
    const MpRun run = mp_run(table, seg, w, d);
    Real sum = 0;
    for (int k = 0; k < 2; ++k) {
      const mp::V<Real> dv = run.v_end[k] - base.v_end[k];
      sum += mp::dotp(dv, dv);
    }
    using boost::multiprecision::sqrt;
    return static_cast<double>(sqrt(sum));
  };
  return {delta, dev(delta), dev(0.5 * delta)};
}

std::vector<SuffRow> sufficiency_report(const ShortSeq& seq, std::size_t window, double tol) {
  if (window < 2) throw Error(ErrorCode::TooShort, "sufficiency windows need at least two islands");
  std::vector<SuffRow> rows;
  for (std::size_t i = 0; i + window <= seq.islands.size(); ++i) {
    const ShortSeq w = short_window(seq, i, window);
    const NeutralAnalysis a = analyze_neutral(build_neutral_system(w), tol);
    SuffRow row;
    row.segment_id = i;
    row.n_islands = window;
    if (window >= 3) {
      if (auto r = is_rich(w)) row.rich_case = r->rich_case;
    }
    row.nullity = a.nullity;
    row.gap_ratio = a.gap_ratio;
    row.verdict = verdict_of(a).kind;
    rows.push_back(row);
  }
  return rows;
}

namespace {

// Relative velocity along the mirror axis of a reflection junction.
bool junction_degenerate(const ShortSeq& w, std::size_t j) {
  const GroupElement hat = w.junctions[j].hat();
  const auto& v = w.islands[j].exit;
  if (!hat.is_reflection() || !v) return false;
  const double th = hat.k() * std::numbers::pi / hat.order();
  try {
    return degeneracy_check((*v)[0], (*v)[1], {std::cos(th), std::sin(th)});
  } catch (const Error&) {
    return true;
  }
}

void tally(SuffClassTally& t, const ShortSeq& w, std::size_t first, int expected, double tol) {
  const NeutralAnalysis a = analyze_neutral(build_neutral_system(w), tol);
  ++t.segments;
  if (a.nullity == expected) {
    ++t.conforming;
    return;
  }
  bool flag = a.ill_conditioned();
  for (std::size_t j = 0; j < w.junctions.size(); ++j) flag = flag || junction_degenerate(w, j);
  if (flag) {
    ++t.flagged;
  } else {
    t.unflagged.push_back(first);
  }
}

}  // namespace

bool SuffSuite::passed(double min_conformity) const {
  for (const SuffClassTally* t : {&reflection, &rich}) {
    if (t->segments == 0 || t->conformity() < min_conformity || !t->unflagged.empty()) return false;
  }
  return true;
}

SuffSuite sufficiency_suite(const ShortSeq& seq, double tol) {
  SuffSuite out;
  const std::size_t n = seq.islands.size();
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const ShortSeq w2 = short_window(seq, i, 2);
    if (w2.junctions[0].hat().is_reflection()) tally(out.reflection, w2, i, 2, tol);
    if (i + 2 < n) {
      const ShortSeq w3 = short_window(seq, i, 3);
      if (is_rich(w3)) tally(out.rich, w3, i, 1, tol);
    }
  }
  return out;
}

std::string suff_csv_header() { return "segment_id,n_islands,rich_case,nullity,gap_ratio,verdict"; }

std::string to_csv_row(const SuffRow& row) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%zu,%zu,%d,%d,%.6g,%s", row.segment_id, row.n_islands, row.rich_case, row.nullity,
                row.gap_ratio, std::string(sufficiency_name(row.verdict)).c_str());
  return buf;
}

}  // namespace twoball
