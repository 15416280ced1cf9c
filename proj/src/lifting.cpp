#include "twoball/lifting.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "twoball/error.hpp"

namespace twoball {

namespace {

LatticeCoord lattice_coord(const UnfoldingAtlas& atlas, Vec2 x) {
  const TorusPoint f = atlas.to_fractional(x);
  const double a = std::round(f.a), b = std::round(f.b);
  if (std::abs(f.a - a) > 1e-7 || std::abs(f.b - b) > 1e-7) {
    throw Error(ErrorCode::GluingFailure, "translation is not a lattice vector");
  }
  return {static_cast<std::int64_t>(a), static_cast<std::int64_t>(b)};
}

Vec2 cartesian(const UnfoldingAtlas& atlas, LatticeCoord c) {
  return static_cast<double>(c.a) * atlas.basis[0] + static_cast<double>(c.b) * atlas.basis[1];
}

bool in_rotations(GroupElement g) { return g.is_rotation(); }

}  // namespace

LiftedState lift_state(const Table& table, const UnfoldingAtlas& atlas, const PhaseState& s,
                       const std::array<AffineLift, 2>& lift) {
  (void)table;
  LiftedState out;
  out.time = s.t;
  out.lift = lift;
  for (int k = 0; k < 2; ++k) {
    out.unfolded[k] = apply(lift[k].g, s.q[k]) + cartesian(atlas, lift[k].c);
    out.z[k] = UnfoldingAtlas::reduce(atlas.to_fractional(out.unfolded[k]));
    out.w[k] = apply(lift[k].g, s.v[k]);
  }
  return out;
}

Vec2 cylinder_offset(const UnfoldingAtlas& atlas, const LiftedState& s, GroupElement h) {
  const Vec2 d = atlas.to_cartesian(s.z[0]) - apply(h, atlas.to_cartesian(s.z[1]));
  TorusPoint f = atlas.to_fractional(d);
  f.a -= std::round(f.a);
  f.b -= std::round(f.b);
  const Vec2 base = atlas.to_cartesian(f);
  Vec2 best = base;
  for (int i = -1; i <= 1; ++i) {
    for (int j = -1; j <= 1; ++j) {
      const Vec2 c = base - cartesian(atlas, {i, j});
      if (norm(c) < norm(best)) best = c;
    }
  }
  return best;
}

GroupElement cylinder_at_collision(const Table& table, const UnfoldingAtlas& atlas, const LiftedState& s,
                                   double tol) {
  GroupElement best = table.group.identity();
  double best_dist = std::numeric_limits<double>::infinity();
  for (const GroupElement& h : table.group.elements()) {
    const double d = norm(cylinder_offset(atlas, s, h));
    if (d < best_dist) {
      best_dist = d;
      best = h;
    }
  }
  if (std::abs(best_dist - table.contact) > tol) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "closest cylinder at distance %.12g, contact distance %.12g", best_dist,
                  table.contact);
    throw Error(ErrorCode::NoCylinderFound, buf);
  }
  return best;
}

GroupElement predict_next_cylinder(GroupElement g1, GroupElement g2, const Junction& junction) {
  return compose(compose(g1, inverse(junction.g[0])), compose(junction.g[1], inverse(g2)));
}

LiftedTrajectory lift_trajectory(const Table& table, const UnfoldingAtlas& atlas, const Trajectory& traj,
                                 std::array<GroupElement, 2> initial_labels) {
  LiftedTrajectory out;
  std::array<AffineLift, 2> lift{AffineLift{initial_labels[0], {}}, AffineLift{initial_labels[1], {}}};
  out.initial = lift_state(table, atlas, traj.initial, lift);
  out.events.reserve(traj.events.size());
  for (const EventRecord& e : traj.events) {
    if (e.type == EventType::Singular) break;
    LiftedEvent le;
    le.event_index = e.index;
    le.type = e.type;
    if (e.type == EventType::WallHit) {
      AffineLift& l = lift[e.ball];
      const Side& side = table.sides[e.side_id];
      const LatticeCoord dc = lattice_coord(atlas, apply(l.g, side.mirror({0.0, 0.0})));
      l.c.a += dc.a;
      l.c.b += dc.b;
      l.g = compose(l.g, side.reflection);
    }
    le.state = lift_state(table, atlas, e.post, lift);
    if (e.type == EventType::BallBall) le.cylinder = cylinder_at_collision(table, atlas, le.state);
    out.events.push_back(le);
  }
  return out;
}

LiftedTrajectory lift_trajectory(const Table& table, const UnfoldingAtlas& atlas, const Trajectory& traj) {
  return lift_trajectory(table, atlas, traj, {table.group.identity(), table.group.identity()});
}

SemiConjugacyReport verify_semiconjugacy(const Table& table, const UnfoldingAtlas& atlas, const Trajectory& traj,
                                         const LiftedTrajectory& lifted) {
  SemiConjugacyReport rep;
  std::array<Vec2, 2> w = lifted.initial.w;
  std::array<Vec2, 2> base = lifted.initial.unfolded;
  double t_base = lifted.initial.time;
  PhaseState prev = traj.initial;
  std::array<GroupElement, 2> labels{lifted.initial.label(0), lifted.initial.label(1)};

  const std::size_t n = std::min(traj.events.size(), lifted.events.size());
  for (std::size_t i = 0; i < n; ++i) {
    const EventRecord& e = traj.events[i];
    const LiftedEvent& le = lifted.events[i];
    if (e.time > prev.t) {
      const double tm = 0.5 * (prev.t + e.time);
      const PhaseState down = prev.advanced(tm - prev.t);
      for (int k = 0; k < 2; ++k) {
        const Vec2 up = base[k] + (tm - t_base) * w[k];
        const Folded f = fold(table, atlas, UnfoldingAtlas::reduce(atlas.to_fractional(up)));
        rep.max_position = std::max(rep.max_position, norm(f.q - down.q[k]));
        rep.max_velocity = std::max(rep.max_velocity, norm(apply(inverse(f.g), w[k]) - down.v[k]));
        if (f.g != labels[k]) ++rep.label_mismatches;
      }
      ++rep.samples;
    }
    if (e.type == EventType::BallBall && le.cylinder) {
      const GroupElement h = *le.cylinder;
      // normal of the cylinder boundary: (d, -h^-1 d) / (sqrt 2 R)
      const Vec2 d = cylinder_offset(atlas, le.state, h);
      const Vec2 d2 = -apply(inverse(h), d);
      const double nn = norm2(d) + norm2(d2);
      const double c = 2.0 * (dot(w[0], d) + dot(w[1], d2)) / nn;
      w[0] -= c * d;
      w[1] -= c * d2;
      for (int k = 0; k < 2; ++k) {
        rep.max_cylinder_velocity = std::max(rep.max_cylinder_velocity, norm(w[k] - le.state.w[k]));
      }
      base = le.state.unfolded;
      t_base = le.state.time;
    }
    labels = {le.state.label(0), le.state.label(1)};
    prev = e.post;
  }
  return rep;
}

bool LiftCheckReport::all_ok() const {
  return label_matches == collisions && where_matches == where_pairs && islands_constant == islands &&
         sandwiches_same == sandwiches && rotation_steps_ok == rotation_steps &&
         o_poor_windows_ok == o_poor_windows && r_poor_windows_ok == r_poor_windows;
}

LiftCheckReport lift_check(const Table&, const UnfoldingAtlas& atlas, const Trajectory& traj,
                           const LiftedTrajectory& lifted) {
  (void)atlas;
  LiftCheckReport rep;
  const LongSeq seq = long_sequence(traj);
  const std::size_t m = seq.collisions.size();

  std::vector<GroupElement> cyl(m);
  std::vector<std::array<GroupElement, 2>> labels(m);
  for (std::size_t c = 0; c < m; ++c) {
    const std::size_t idx = seq.collisions[c].event_index;
    if (idx >= lifted.events.size() || !lifted.events[idx].cylinder) {
      throw Error(ErrorCode::NoCylinderFound, "collision without a lifted cylinder");
    }
    const LiftedEvent& le = lifted.events[idx];
    cyl[c] = *le.cylinder;
    labels[c] = {le.state.label(0), le.state.label(1)};
    ++rep.collisions;
    if (cyl[c] == compose(labels[c][0], inverse(labels[c][1]))) ++rep.label_matches;
  }

  for (std::size_t c = 0; c + 1 < m; ++c) {
    const Junction& j = seq.junctions[c];
    ++rep.where_pairs;
    if (predict_next_cylinder(labels[c][0], labels[c][1], j) == cyl[c + 1]) ++rep.where_matches;
    if (in_rotations(cyl[c]) && in_rotations(j.bar())) {
      ++rep.rotation_steps;
      if (in_rotations(cyl[c + 1])) ++rep.rotation_steps_ok;
    }
  }

  const ShortSeq sh = compress_to_short(seq);
  for (const Island& isl : sh.islands) {
    if (isl.count < 2) continue;
    ++rep.islands;
    bool same = true;
    for (std::size_t c = isl.first + 1; c < isl.first + isl.count; ++c) same = same && cyl[c] == cyl[isl.first];
    if (same) ++rep.islands_constant;
  }

  for (std::size_t i = 0; i + 2 < sh.islands.size(); ++i) {
    const GroupElement hat = sh.junctions[i].hat();
    const GroupElement bar = sh.junctions[i + 1].bar();
    if (!hat.is_reflection() || !bar.is_reflection()) continue;
    if (bar.k() != conjugate_axis(sh.islands[i + 1].s, hat.k())) continue;
    ++rep.sandwiches;
    const Island& a = sh.islands[i];
    if (cyl[a.first + a.count - 1] == cyl[sh.islands[i + 2].first]) ++rep.sandwiches_same;
  }

  // Poor windows, relabelled so that their first collision sits on C_e.
  constexpr std::size_t kWindow = 5;
  for (std::size_t i = 0; i + kWindow <= sh.islands.size(); ++i) {
    ShortSeq win;
    win.order_n = sh.order_n;
    win.islands.assign(sh.islands.begin() + i, sh.islands.begin() + i + kWindow);
    win.junctions.assign(sh.junctions.begin() + i, sh.junctions.begin() + i + kWindow - 1);
    const Poorness p = poorness_class(win);
    if (p.cls != PoornessClass::OPoor && p.cls != PoornessClass::RPoor) continue;
    const std::size_t c0 = win.islands.front().first;
    const std::size_t c1 = win.islands.back().first + win.islands.back().count;
    const GroupElement a1 = inverse(labels[c0][0]);
    const GroupElement a2 = labels[c0][1];
    std::vector<GroupElement> seen;
    for (std::size_t c = c0; c < c1; ++c) {
      const GroupElement h = compose(compose(a1, cyl[c]), a2);
      if (std::find(seen.begin(), seen.end(), h) == seen.end()) seen.push_back(h);
    }
    if (p.cls == PoornessClass::OPoor) {
      ++rep.o_poor_windows;
      if (std::all_of(seen.begin(), seen.end(), in_rotations)) ++rep.o_poor_windows_ok;
    } else {
      ++rep.r_poor_windows;
      const auto reflections = std::count_if(seen.begin(), seen.end(), [](GroupElement g) { return g.is_reflection(); });
      const bool ok = seen.front().is_identity() && seen.size() <= 2 &&
                      std::all_of(seen.begin(), seen.end(),
                                  [](GroupElement g) { return g.is_identity() || g.is_reflection(); }) &&
                      reflections <= 1;
      if (ok) ++rep.r_poor_windows_ok;
    }
  }
  return rep;
}

std::string lifted_csv_header() {
  return "event_index,time,cylinder_kind,cylinder_index,z1a,z1b,z2a,z2b,w1x,w1y,w2x,w2y,g1,g2";
}

std::string to_csv_row(const LiftedEvent& e) {
  const auto& s = e.state;
  const char* kind = !e.cylinder ? "none" : e.cylinder->is_rotation() ? "rotation" : "reflection";
  char buf[512];
  std::snprintf(buf, sizeof buf, "%zu,%.17g,%s,%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%s,%s",
                e.event_index, s.time, kind, e.cylinder ? e.cylinder->index() : -1, s.z[0].a, s.z[0].b, s.z[1].a,
                s.z[1].b, s.w[0].x, s.w[0].y, s.w[1].x, s.w[1].y, to_token(s.label(0)).c_str(),
                to_token(s.label(1)).c_str());
  return buf;
}

// ---------------------------------------------------------------------------
// Cylinder geometry

Cylinder make_cylinder(GroupElement g, double R) {
  Cylinder c;
  c.g = g;
  c.radius = R;
  const double s = 1.0 / std::sqrt(2.0);
  const Vec2 e[2] = {{1.0, 0.0}, {0.0, 1.0}};
  for (int j = 0; j < 2; ++j) {
    const Vec2 ge = apply(g, e[j]);
    c.generator.col(j) << s * e[j].x, s * e[j].y, s * ge.x, s * ge.y;
    c.base.col(j) << s * e[j].x, s * e[j].y, -s * ge.x, -s * ge.y;
  }
  return c;
}

int subspace_rank(const Basis4& m, double tol) {
  if (m.cols() == 0) return 0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  const auto& sv = svd.singularValues();
  int r = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) r += sv(i) > tol ? 1 : 0;
  return r;
}

namespace {

Basis4 hstack(const Basis4& a, const Basis4& b) {
  Basis4 m(4, a.cols() + b.cols());
  m << a, b;
  return m;
}

/// Orthonormal bases of span(m) and its orthogonal complement.
std::pair<Basis4, Basis4> span_and_complement(const Basis4& m, double tol = 1e-10) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeFullU);
  const int r = subspace_rank(m, tol);
  const Eigen::MatrixXd& u = svd.matrixU();
  return {u.leftCols(r), u.rightCols(4 - r)};
}

}  // namespace

int intersection_dimension(const Basis4& u, const Basis4& v, double tol) {
  return subspace_rank(u, tol) + subspace_rank(v, tol) - subspace_rank(hstack(u, v), tol);
}

bool transversal(const Cylinder& a, const Cylinder& b) {
  return intersection_dimension(a.generator, b.generator) == 0 && intersection_dimension(a.base, b.base) == 0;
}

OnsResult ons_split(const std::vector<Cylinder>& cylinders) {
  OnsResult out;
  const std::size_t m = cylinders.size();
  if (m == 0 || m > 20) throw Error(ErrorCode::InvalidArgument, "ons_split needs between 1 and 20 cylinders");
  constexpr double tol = 1e-10;
  // S1 always holds cylinder 0, so every bipartition is visited once.
  for (std::uint32_t mask = 1; mask < (1u << m); mask += 2) {
    Basis4 s1(4, 0);
    for (std::size_t i = 0; i < m; ++i) {
      if (mask & (1u << i)) s1 = hstack(s1, cylinders[i].base);
    }
    auto [k1, k2] = span_and_complement(s1, tol);
    if (k2.cols() == 0) continue;
    bool inside = true;
    for (std::size_t i = 0; inside && i < m; ++i) {
      if (mask & (1u << i)) continue;
      inside = (k1.transpose() * cylinders[i].base).norm() < 1e-9;
    }
    if (!inside) continue;
    out.split = true;
    out.k1 = k1;
    out.k2 = k2;
    out.side.resize(m);
    for (std::size_t i = 0; i < m; ++i) out.side[i] = (mask & (1u << i)) ? 1 : 2;
    return out;
  }
  return out;
}

std::optional<Eigen::Matrix4d> orthogonal_frame(const Cylinder& a, const Cylinder& b) {
  const Eigen::Matrix4d pa = a.generator * a.generator.transpose();
  const Eigen::Matrix4d pb = b.generator * b.generator.transpose();
  if ((pa * pb - pb * pa).norm() > 1e-10) return std::nullopt;
  // commuting projections are diagonal in a common eigenbasis; eigenvalues of
  // pa + 2 pb label the pieces A^B, A^B-perp, A-perp^B, A-perp^B-perp
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> es(pa + 2.0 * pb);
  return es.eigenvectors();
}

LatticeSubspaceWitness lattice_witness(const Cylinder& c, const UnfoldingAtlas& atlas) {
  LatticeSubspaceWitness w;
  w.ok = true;
  for (int j = 0; j < 2; ++j) {
    const Vec2 l = atlas.basis[j];
    const Vec2 gl = apply(c.g, l);
    const LatticeCoord lc = lattice_coord(atlas, l);
    try {
      const LatticeCoord gc = lattice_coord(atlas, gl);
      w.generator[j] = {lc, gc};
      w.base[j] = {lc, LatticeCoord{-gc.a, -gc.b}};
    } catch (const Error&) {
      w.ok = false;
    }
  }
  return w;
}

}  // namespace twoball
