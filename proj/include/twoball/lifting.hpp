#pragma once

// Lift of the two-disk flow to the cylindric billiard on T^4 = T^2 x T^2.
//
// Each ball carries an affine unfolding transform z = g q + c, where the label
// g is updated to g * rho at every wall hit and c stays in the lattice. The
// lifted velocity w = g v is constant between disk-disk collisions; at a
// collision the pair (z1, z2) lies on the boundary of the cylinder
// C_h = {|z1 - h z2| <= R} with h = g1 g2^-1.

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "twoball/dynamics.hpp"
#include "twoball/symbolic.hpp"
#include "twoball/table.hpp"

namespace twoball {

struct LatticeCoord {
  std::int64_t a = 0, b = 0;
  bool operator==(const LatticeCoord&) const = default;
};

struct AffineLift {
  GroupElement g;
  LatticeCoord c;  // translation in lattice coordinates
};

struct LiftedState {
  double time = 0.0;
  std::array<TorusPoint, 2> z;   // reduced torus points
  std::array<Vec2, 2> unfolded;  // g q + c in the plane (not reduced)
  std::array<Vec2, 2> w;         // lifted velocities g v
  std::array<AffineLift, 2> lift;
  GroupElement label(int k) const { return lift[k].g; }
};

struct LiftedEvent {
  std::size_t event_index = 0;
  EventType type = EventType::WallHit;
  LiftedState state;                 // after the event
  std::optional<GroupElement> cylinder;  // disk-disk collisions only
};

struct LiftedTrajectory {
  LiftedState initial;
  std::vector<LiftedEvent> events;
};

LiftedState lift_state(const Table& table, const UnfoldingAtlas& atlas, const PhaseState& s,
                       const std::array<AffineLift, 2>& lift);

/// Lifts every event; throws NoCylinderFound if a collision cannot be matched to a cylinder.
LiftedTrajectory lift_trajectory(const Table& table, const UnfoldingAtlas& atlas, const Trajectory& traj,
                                 std::array<GroupElement, 2> initial_labels);
LiftedTrajectory lift_trajectory(const Table& table, const UnfoldingAtlas& atlas, const Trajectory& traj);

/// The h minimizing |z1 - h z2 - l| over G and the nearest lattice translates;
/// throws NoCylinderFound when that minimum is not R within tol.
GroupElement cylinder_at_collision(const Table& table, const UnfoldingAtlas& atlas, const LiftedState& s,
                                   double tol = 1e-8);

/// h = g1 k1^-1 k2 g2^-1 for labels (g1, g2) at the first collision and the junction (k1, k2).
GroupElement predict_next_cylinder(GroupElement g1, GroupElement g2, const Junction& junction);

/// Shortest representative of z1 - h z2 modulo the lattice (Cartesian).
Vec2 cylinder_offset(const UnfoldingAtlas& atlas, const LiftedState& s, GroupElement h);

struct SemiConjugacyReport {
  std::size_t samples = 0;
  double max_position = 0.0;
  double max_velocity = 0.0;
  double max_cylinder_velocity = 0.0;  // upstairs cylinder reflection vs lifted downstairs velocities
  std::size_t label_mismatches = 0;    // fold cell differs from the tracked label
  double max_deviation() const { return std::max({max_position, max_velocity, max_cylinder_velocity}); }
};

/// Runs the upstairs linear flow between collisions (velocities reflected on the
/// cylinders upstairs, positions restarted from the lift at each collision),
/// folds it at the midpoint of every free flight and compares with the
/// downstairs state.
SemiConjugacyReport verify_semiconjugacy(const Table& table, const UnfoldingAtlas& atlas, const Trajectory& traj,
                                         const LiftedTrajectory& lifted);

struct LiftCheckReport {
  std::size_t collisions = 0;
  std::size_t label_matches = 0;          // cylinder == g1 g2^-1
  std::size_t where_pairs = 0;            // consecutive collision pairs
  std::size_t where_matches = 0;          // predicted == observed
  std::size_t islands = 0;                // islands with >= 2 collisions
  std::size_t islands_constant = 0;
  std::size_t sandwiches = 0;             // b k (b,s) l b with hat k = R_E, bar l = R_sE
  std::size_t sandwiches_same = 0;
  std::size_t rotation_steps = 0;         // b k b with C_g, g and bar k in G_O
  std::size_t rotation_steps_ok = 0;
  std::size_t o_poor_windows = 0;
  std::size_t o_poor_windows_ok = 0;      // relabelled cylinders all in G_O
  std::size_t r_poor_windows = 0;
  std::size_t r_poor_windows_ok = 0;      // relabelled cylinders within {e, R}
  bool all_ok() const;
};

LiftCheckReport lift_check(const Table& table, const UnfoldingAtlas& atlas, const Trajectory& traj,
                           const LiftedTrajectory& lifted);

std::string lifted_csv_header();
std::string to_csv_row(const LiftedEvent& e);

// Cylinder geometry in R^4 = R^2 x R^2.

using Basis4 = Eigen::Matrix<double, 4, Eigen::Dynamic>;

struct Cylinder {
  GroupElement g;
  double radius = 0.0;       // R, the contact distance
  Eigen::Matrix<double, 4, 2> generator;  // orthonormal basis of A_g = {(w, g w)}
  Eigen::Matrix<double, 4, 2> base;       // orthonormal basis of L_g = {(w, -g w)}
};

Cylinder make_cylinder(GroupElement g, double R);

int subspace_rank(const Basis4& m, double tol = 1e-10);
/// dim(U cap V) = dim U + dim V - dim(U + V)
int intersection_dimension(const Basis4& u, const Basis4& v, double tol = 1e-10);
/// A and L of two distinct cylinders meet only in 0.
bool transversal(const Cylinder& a, const Cylinder& b);

struct OnsResult {
  bool split = false;
  Basis4 k1, k2;            // orthonormal bases
  std::vector<int> side;    // 1 or 2 per cylinder
};

/// Searches the bipartitions S1 | S2 (S1 holding the first cylinder, S2 possibly
/// empty) for span(L_i, i in S1) = K1 with K2 = K1-perp nonzero and every L_j,
/// j in S2, inside K2.
OnsResult ons_split(const std::vector<Cylinder>& cylinders);

/// Orthonormal frame of R^4 such that both generator subspaces are spanned by
/// frame vectors; empty when the orthogonal projections onto them do not commute.
std::optional<Eigen::Matrix4d> orthogonal_frame(const Cylinder& a, const Cylinder& b);

struct LatticeSubspaceWitness {
  std::array<std::array<LatticeCoord, 2>, 2> generator;  // (l, g l) as lattice coordinates of both factors
  std::array<std::array<LatticeCoord, 2>, 2> base;       // (l, -g l)
  bool ok = false;
};

/// Two independent lattice vectors in each of A_g and L_g.
LatticeSubspaceWitness lattice_witness(const Cylinder& c, const UnfoldingAtlas& atlas);

}  // namespace twoball
