#include "twoball/replay.hpp"

#include <algorithm>
#include <array>
#include <boost/multiprecision/cpp_bin_float.hpp>
#include <limits>
#include <optional>
#include <vector>

#include "mp_flow.hpp"

namespace twoball {

namespace {

using mp::Flow;
using mp::State;
using mp::V;

template <class Real>
double to_d(const Real& x) {
  return static_cast<double>(x);
}

template <class Real>
ReplayReport round_trip(const Table& table, const PhaseState& init, std::size_t n, int digits) {
  Flow<Real> flow(table);
  State<Real> s;
  for (int k = 0; k < 2; ++k) {
    s.q[k] = {Real(init.q[k].x), Real(init.q[k].y)};
    s.v[k] = {Real(init.v[k].x), Real(init.v[k].y)};
  }
  const State<Real> start = s;
  ReplayReport rep;
  rep.digits = digits;

  Real elapsed = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto e = flow.next(s);
    if (!e) return rep;
    Flow<Real>::advance(s, e->dt);
    elapsed += e->dt;
    flow.apply(s, *e);
    ++rep.events_forward;
    if (e->kind == 1) ++rep.ball_ball;
  }
  const auto tail = flow.next(s);
  if (!tail) return rep;
  const Real half = tail->dt / 2;
  Flow<Real>::advance(s, half);
  const Real total = elapsed + half;

  for (int k = 0; k < 2; ++k) s.v[k] = Real(-1) * s.v[k];
  Real remaining = total;
  for (;;) {
    const auto e = flow.next(s);
    if (!e) return rep;
    if (e->dt >= remaining) {
      Flow<Real>::advance(s, remaining);
      break;
    }
    Flow<Real>::advance(s, e->dt);
    remaining -= e->dt;
    flow.apply(s, *e);
    ++rep.events_backward;
  }
  using std::abs;
  using std::log10;
  Real err = 0;
  for (int k = 0; k < 2; ++k) {
    const V<Real> dq = s.q[k] - start.q[k];
    const V<Real> dv = s.v[k] + start.v[k];
    for (const Real& x : {dq.x, dq.y, dv.x, dv.y}) err = std::max(err, Real(abs(x)));
  }
  rep.max_error = to_d(err);
  rep.log10_error = err > 0 ? to_d(log10(err)) : -std::numeric_limits<double>::infinity();
  rep.completed = true;
  return rep;
}

}  // namespace

ReplayReport reverse_replay(const Table& table, const PhaseState& s, std::size_t n_events) {
  constexpr int kDigits = 600;
  using Real = boost::multiprecision::number<boost::multiprecision::cpp_bin_float<kDigits>,
                                             boost::multiprecision::et_off>;
  return round_trip<Real>(table, s, n_events, kDigits);
}

ReplayReport reverse_replay_double(const Table& table, const PhaseState& s, std::size_t n_events) {
  return round_trip<double>(table, s, n_events, 16);
}

}  // namespace twoball
