#pragma once

// Event engine templated on the scalar type, used where double precision is
// not enough (round trips, finite-difference oracles). Same event rules as the
// double simulator without the singular-event classification; walls are the
// sides of P_r in table order.

#include <array>
#include <optional>
#include <vector>

#include "twoball/table.hpp"

namespace twoball::mp {

template <class Real>
struct V {
  Real x, y;
};

template <class Real> V<Real> operator+(const V<Real>& a, const V<Real>& b) { return {a.x + b.x, a.y + b.y}; }
template <class Real> V<Real> operator-(const V<Real>& a, const V<Real>& b) { return {a.x - b.x, a.y - b.y}; }
template <class Real> V<Real> operator*(const Real& s, const V<Real>& a) { return {s * a.x, s * a.y}; }
template <class Real> Real dotp(const V<Real>& a, const V<Real>& b) { return a.x * b.x + a.y * b.y; }

template <class Real>
struct State {
  std::array<V<Real>, 2> q, v;
};

template <class Real>
struct Wall {
  V<Real> n;
  Real offset;
};

template <class Real>
class Flow {
 public:
  explicit Flow(const Table& table) : contact_(table.contact) {
    using std::sqrt;
    const auto& pv = table.eroded_vertices;
    for (std::size_t i = 0; i < pv.size(); ++i) {
      const V<Real> a{pv[i].x, pv[i].y};
      const V<Real> b{pv[(i + 1) % pv.size()].x, pv[(i + 1) % pv.size()].y};
      const V<Real> d = b - a;
      const Real len = sqrt(dotp(d, d));
      const V<Real> n{d.y / len, -d.x / len};
      walls_.push_back({n, dotp(n, a)});
    }
  }

  struct Next {
    Real dt;
    int kind;  // 0 wall, 1 ball-ball
    int ball, wall;
  };

  std::optional<Next> next(const State<Real>& s) const {
    using std::sqrt;
    std::optional<Next> best;
    for (int k = 0; k < 2; ++k) {
      for (std::size_t w = 0; w < walls_.size(); ++w) {
        const Real u = dotp(walls_[w].n, s.v[k]);
        if (u <= 0) continue;
        Real dt = (walls_[w].offset - dotp(walls_[w].n, s.q[k])) / u;
        if (dt < 0) dt = 0;
        if (!best || dt < best->dt) best = Next{dt, 0, k, static_cast<int>(w)};
      }
    }
    if (contact_ > 0) {
      const V<Real> dq = s.q[0] - s.q[1], dv = s.v[0] - s.v[1];
      const Real b = dotp(dq, dv);
      if (b < 0) {
        const Real a = dotp(dv, dv);
        const Real c = dotp(dq, dq) - contact_ * contact_;
        const Real disc = b * b - a * c;
        if (disc > 0) {
          Real dt = c / (-b + sqrt(disc));
          if (dt < 0) dt = 0;
          if (!best || dt < best->dt) best = Next{dt, 1, -1, -1};
        }
      }
    }
    return best;
  }

  static void advance(State<Real>& s, const Real& dt) {
    for (int k = 0; k < 2; ++k) s.q[k] = s.q[k] + dt * s.v[k];
  }

  void apply(State<Real>& s, const Next& e) const {
    if (e.kind == 0) {
      const auto& w = walls_[e.wall];
      const Real u = dotp(w.n, s.v[e.ball]);
      s.v[e.ball] = s.v[e.ball] - Real(2 * u) * w.n;
    } else {
      using std::sqrt;
      const V<Real> dq = s.q[0] - s.q[1];
      const Real len = sqrt(dotp(dq, dq));
      const V<Real> u{dq.x / len, dq.y / len};
      const Real p = dotp(s.v[0] - s.v[1], u);
      s.v[0] = s.v[0] - p * u;
      s.v[1] = s.v[1] + p * u;
    }
  }

 private:
  Real contact_;
  std::vector<Wall<Real>> walls_;
};

}  // namespace twoball::mp
