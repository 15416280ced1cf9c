#include "twoball/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "twoball/error.hpp"

namespace twoball {

std::string_view event_type_name(const EventRecord& e) {
  switch (e.type) {
    case EventType::WallHit: return "wall";
    case EventType::BallBall: return "ballball";
    case EventType::Singular:
      switch (e.singular) {
        case SingularKind::Corner: return "singular_corner";
        case SingularKind::Tangential: return "singular_tangential";
        case SingularKind::Simultaneous: return "singular_simultaneous";
        case SingularKind::None: break;
      }
      return "singular";
  }
  return "?";
}

namespace {

struct Candidate {
  double dt;
  EventType type;
  int ball;
  int side_id;
};

// Smaller root of |dq + t dv|^2 = R^2 for an approaching pair, in the
// cancellation-free form t = c / (-b + sqrt(b^2 - a c)).
// A discriminant inside the tangential band (normal speed sqrt(disc)/R at contact)
// counts as a grazing contact.
std::optional<double> contact_time(Vec2 dq, Vec2 dv, double contact, double tangential) {
  const double b = dot(dq, dv);
  if (b >= 0.0) return std::nullopt;
  const double a = norm2(dv);
  const double c = norm2(dq) - contact * contact;
  const double disc = b * b - a * c;
  const double band = tangential * contact * tangential * contact;
  if (disc < -band) return std::nullopt;
  return std::max(0.0, c / (-b + std::sqrt(std::max(disc, 0.0))));
}

// Both updates divide by the squared length of the direction instead of using a
// normalized vector, so a fixed rounding error in a side normal does not bias
// the kinetic energy at every hit on that side.
Vec2 reflect(Vec2 v, Vec2 n) {
  using L = long double;
  const L c = 2.0L * (L(n.x) * v.x + L(n.y) * v.y) / (L(n.x) * n.x + L(n.y) * n.y);
  return {static_cast<double>(v.x - c * n.x), static_cast<double>(v.y - c * n.y)};
}

void exchange_normal(Vec2& v1, Vec2& v2, Vec2 dq) {
  using L = long double;
  const L c = ((L(v1.x) - v2.x) * dq.x + (L(v1.y) - v2.y) * dq.y) / (L(dq.x) * dq.x + L(dq.y) * dq.y);
  v1 = {static_cast<double>(v1.x - c * dq.x), static_cast<double>(v1.y - c * dq.y)};
  v2 = {static_cast<double>(v2.x + c * dq.x), static_cast<double>(v2.y + c * dq.y)};
}

}  // namespace

PendingEvent next_event(const Table& table, const PhaseState& s, const Tolerances& tol) {
  std::vector<Candidate> cands;
  cands.reserve(2 * table.sides.size() + 1);
  for (int k = 0; k < 2; ++k) {
    for (const Side& side : table.sides) {
      const double u = dot(side.outward, s.v[k]);
      if (u <= 0.0) continue;
      const double dt = std::max(0.0, side.signed_distance(s.q[k]) / u);
      cands.push_back({dt, EventType::WallHit, k, side.id});
    }
  }
  if (table.contact > 0.0) {
    if (auto dt = contact_time(s.q[0] - s.q[1], s.v[0] - s.v[1], table.contact, tol.tangential)) {
      cands.push_back({*dt, EventType::BallBall, -1, -1});
    }
  }
  if (cands.empty()) throw Error(ErrorCode::NoEvent, "no future event (both balls at rest?)");

  std::partial_sort(cands.begin(), cands.begin() + std::min<std::size_t>(2, cands.size()),
                    cands.end(), [](const Candidate& a, const Candidate& b) { return a.dt < b.dt; });
  const Candidate& first = cands[0];
  PendingEvent ev{first.dt, first.type, first.ball, first.side_id, SingularKind::None};

  if (cands.size() > 1 && cands[1].dt - first.dt < tol.event_tie) {
    const Candidate& second = cands[1];
    const bool corner = first.type == EventType::WallHit && second.type == EventType::WallHit &&
                        first.ball == second.ball;
    ev.type = EventType::Singular;
    ev.singular = corner ? SingularKind::Corner : SingularKind::Simultaneous;
    return ev;
  }

  if (first.type == EventType::WallHit) {
    const Side& side = table.sides[first.side_id];
    const Vec2 p = s.q[first.ball] + first.dt * s.v[first.ball];
    if (std::min(norm(p - side.a), norm(p - side.b)) < tol.vertex) {
      ev.type = EventType::Singular;
      ev.singular = SingularKind::Corner;
    } else if (dot(side.outward, s.v[first.ball]) < tol.tangential * norm(s.v[first.ball])) {
      ev.type = EventType::Singular;
      ev.singular = SingularKind::Tangential;
    }
  } else {
    const Vec2 dq = s.q[0] - s.q[1] + first.dt * (s.v[0] - s.v[1]);
    const Vec2 u = dq / norm(dq);
    if (std::abs(dot(s.v[0] - s.v[1], u)) < tol.tangential) {
      ev.type = EventType::Singular;
      ev.singular = SingularKind::Tangential;
    }
  }
  return ev;
}

PhaseState collide_balls(const Table& table, const PhaseState& state, double contact_tol) {
  const Vec2 dq = state.q[0] - state.q[1];
  const double dist = norm(dq);
  if (std::abs(dist - table.contact) > contact_tol || dist == 0.0) {
    throw Error(ErrorCode::NotInContact, "balls are not at contact distance");
  }
  if (!(dot(state.v[0] - state.v[1], dq) < 0.0)) {
    throw Error(ErrorCode::NotApproaching, "balls are not approaching");
  }
  PhaseState out = state;
  exchange_normal(out.v[0], out.v[1], dq);
  return out;
}

PhaseState reflect_wall(const Table& table, const PhaseState& state, int ball, int side_id,
                        double side_tol) {
  if (ball < 0 || ball > 1 || side_id < 0 || side_id >= static_cast<int>(table.sides.size())) {
    throw Error(ErrorCode::InvalidArgument, "bad ball or side id");
  }
  const Side& side = table.sides[side_id];
  if (std::abs(side.signed_distance(state.q[ball])) > side_tol) {
    throw Error(ErrorCode::NotOnSide, "ball center is not on the side");
  }
  const double u = dot(side.outward, state.v[ball]);
  if (!(u > 0.0)) throw Error(ErrorCode::NotOutgoing, "ball is not moving out through the side");
  PhaseState out = state;
  out.v[ball] = reflect(state.v[ball], side.outward);
  return out;
}

Simulator::Simulator(const Table& table, PhaseState initial, Tolerances tol)
    : table_(&table), tol_(tol), state_(initial), energy0_(initial.energy()) {}

double Simulator::next_event_time() {
  if (!pending_) pending_ = next_event(*table_, state_, tol_);
  return state_.t + pending_->dt;
}

void Simulator::flow_to(double t) {
  const double dt = t - state_.t;
  if (dt < 0.0 || t > next_event_time()) {
    throw Error(ErrorCode::InvalidArgument, "flow_to target beyond the next event");
  }
  state_ = state_.advanced(dt);
  state_.t = t;
  if (pending_) pending_->dt -= dt;
}

EventRecord Simulator::step() {
  if (halted_) throw Error(ErrorCode::SingularHalt, "simulator halted at a singular event");
  next_event_time();
  const PendingEvent ev = *pending_;
  pending_.reset();
  state_ = state_.advanced(ev.dt);

  EventRecord rec;
  rec.index = stats_.events;
  rec.type = ev.type;
  rec.singular = ev.singular;
  rec.reflection = table_->group.identity();

  switch (ev.type) {
    case EventType::WallHit: {
      const Side& side = table_->sides[ev.side_id];
      Vec2& q = state_.q[ev.ball];
      q -= (dot(side.outward, q) - side.offset) * side.outward;
      Vec2& v = state_.v[ev.ball];
      v = reflect(v, side.outward);
      rec.ball = ev.ball;
      rec.side_id = ev.side_id;
      rec.reflection = side.reflection;
      ++stats_.wall_hits;
      break;
    }
    case EventType::BallBall: {
      const Vec2 dq = state_.q[0] - state_.q[1];
      const Vec2 u = dq / norm(dq);
      const Vec2 mid = 0.5 * (state_.q[0] + state_.q[1]);
      state_.q[0] = mid + 0.5 * table_->contact * u;
      state_.q[1] = mid - 0.5 * table_->contact * u;
      exchange_normal(state_.v[0], state_.v[1], state_.q[0] - state_.q[1]);
      ++stats_.ball_ball;
      break;
    }
    case EventType::Singular:
      halted_ = true;
      stats_.singular_halt = true;
      break;
  }
  ++stats_.events;
  rec.time = state_.t;
  rec.post = state_;
  check_constraints();
  return rec;
}

void Simulator::check_constraints() {
  stats_.max_energy_drift = std::max(stats_.max_energy_drift, std::abs(state_.energy() - energy0_));
  const bool overlap =
      table_->contact > 0.0 && norm(state_.q[0] - state_.q[1]) < table_->contact - 1e-12;
  if (overlap || !table_->contains(state_.q[0], 1e-12) || !table_->contains(state_.q[1], 1e-12)) {
    ++stats_.constraint_violations;
  }
}

RunStats simulate(const Table& table, const PhaseState& initial, const Budget& budget,
                  const EventObserver& observer, PhaseState* final_state, const Tolerances& tol) {
  Simulator sim(table, initial, tol);
  while (!sim.halted()) {
    if (budget.events && sim.event_count() >= *budget.events) break;
    if (budget.max_time && sim.next_event_time() > *budget.max_time) {
      sim.flow_to(*budget.max_time);
      break;
    }
    const EventRecord rec = sim.step();
    if (observer) observer(rec);
  }
  if (final_state != nullptr) *final_state = sim.state();
  return sim.stats();
}

Trajectory simulate(const Table& table, const PhaseState& initial, const Budget& budget,
                    const Tolerances& tol) {
  Trajectory traj;
  traj.initial = initial;
  traj.stats = simulate(
      table, initial, budget, [&](const EventRecord& e) { traj.events.push_back(e); },
      &traj.final_state, tol);
  return traj;
}

Vec2 sample_point(const Table& table, Rng& rng) {
  double xmin = std::numeric_limits<double>::max(), ymin = xmin;
  double xmax = std::numeric_limits<double>::lowest(), ymax = xmax;
  for (auto p : table.eroded_vertices) {
    xmin = std::min(xmin, p.x);
    xmax = std::max(xmax, p.x);
    ymin = std::min(ymin, p.y);
    ymax = std::max(ymax, p.y);
  }
  std::uniform_real_distribution<double> ux(xmin, xmax), uy(ymin, ymax);
  for (;;) {
    const Vec2 p{ux(rng), uy(rng)};
    if (table.contains(p)) return p;
  }
}

PhaseState sample_state(const Table& table, Rng& rng) {
  if (table.contact >= table.eroded_diameter()) {
    throw Error(ErrorCode::RejectionOverflow, "contact distance exceeds the eroded diameter");
  }
  constexpr long kMaxAttempts = 10'000'000;
  PhaseState s;
  bool accepted = false;
  for (long i = 0; i < kMaxAttempts && !accepted; ++i) {
    s.q[0] = sample_point(table, rng);
    s.q[1] = sample_point(table, rng);
    accepted = norm(s.q[0] - s.q[1]) >= table.contact;
  }
  if (!accepted) throw Error(ErrorCode::RejectionOverflow, "acceptance rate below 1e-6");
  std::normal_distribution<double> gauss;
  double w[4];
  double n2 = 0.0;
  do {
    n2 = 0.0;
    for (double& x : w) {
      x = gauss(rng);
      n2 += x * x;
    }
  } while (n2 < 1e-12);
  const double inv = 1.0 / std::sqrt(n2);
  s.v[0] = {w[0] * inv, w[1] * inv};
  s.v[1] = {w[2] * inv, w[3] * inv};
  s.t = 0.0;
  return s;
}

PhaseState reversed(const PhaseState& s) {
  PhaseState r = s;
  r.v[0] = -s.v[0];
  r.v[1] = -s.v[1];
  return r;
}

std::string trajectory_csv_header() {
  return "event_index,time,type,ball,side_id,group_kind,group_index,"
         "q1x,q1y,q2x,q2y,v1x,v1y,v2x,v2y";
}

std::string to_csv_row(const EventRecord& e) {
  const bool wall = e.type == EventType::WallHit;
  const char* kind = wall ? (e.reflection.is_rotation() ? "rotation" : "reflection") : "none";
  const auto& p = e.post;
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "%zu,%.17g,%s,%d,%d,%s,%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g",
                e.index, e.time, std::string(event_type_name(e)).c_str(), wall ? e.ball + 1 : 0,
                wall ? e.side_id : -1, kind, wall ? e.reflection.index() : -1, p.q[0].x, p.q[0].y,
                p.q[1].x, p.q[1].y, p.v[0].x, p.v[0].y, p.v[1].x, p.v[1].y);
  return buf;
}

}  // namespace twoball
