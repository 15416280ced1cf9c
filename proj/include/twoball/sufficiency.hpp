#pragma once

// Neutral subspaces of trajectory segments.
//
// A neutral vector just before island j has the form (n_j, n_j) + alpha_j (v1, v2).
// Across island j the translation becomes s_j n_j; across the junction to island
// j+1 each ball's component is carried by its own junction element. Equating the
// result with the form at the next island entry gives, per junction and ball k,
//
//   g^(k) s_j n_j - n_{j+1} = (alpha_{j+1} - alpha_j) v_k^{entry, j+1}.
//
// Unknowns are ordered (n_j.x, n_j.y, alpha_j) per island.

#include <Eigen/Dense>
#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "twoball/dynamics.hpp"
#include "twoball/symbolic.hpp"
#include "twoball/table.hpp"

namespace twoball {

struct NeutralOptions {
  bool equal_advances = false;  // append alpha_j - alpha_{j+1} = 0 rows
};

struct NeutralSystem {
  std::size_t islands = 0;
  std::size_t junction_rows = 0;
  Eigen::MatrixXd matrix;  // rows x 3*islands
};

/// Throws MissingVelocities when an island after the first has no entry velocities.
NeutralSystem build_neutral_system(const ShortSeq& seq, NeutralOptions opt = {});

struct NeutralAnalysis {
  int nullity = 0;
  double gap_ratio = 0.0;          // distance of the spectrum from the threshold, as a factor
  Eigen::VectorXd singular_values;  // padded with zeros to the number of unknowns
  Eigen::MatrixXd null_basis;       // orthonormal columns
  bool ill_conditioned() const { return gap_ratio < 10.0; }
};

NeutralAnalysis analyze_neutral(const NeutralSystem& sys, double tol = 1e-8);

/// Nullity; throws IllConditioned when the gap ratio is below 10.
int neutral_dimension(const NeutralSystem& sys, double tol = 1e-8);

enum class SufficiencyKind { Sufficient, NotSufficient, Degenerate };
std::string_view sufficiency_name(SufficiencyKind k);

struct SufficiencyVerdict {
  SufficiencyKind kind = SufficiencyKind::Degenerate;
  int dim = 0;
  double gap_ratio = 0.0;
};

/// Needs at least two islands (TooShort otherwise).
SufficiencyVerdict is_sufficient(const ShortSeq& seq, NeutralOptions opt = {});

/// |det[v1 - v2, e]| < 1e-9 |v1 - v2|; throws DegenerateRelativeVelocity if |v1 - v2| <= 1e-10.
bool degeneracy_check(Vec2 v1, Vec2 v2, Vec2 e);

/// Islands [first, first + count) of a short sequence with their junctions.
ShortSeq short_window(const ShortSeq& seq, std::size_t first, std::size_t count);

/// A self-contained piece of trajectory from the middle of the free flight before
/// a disk-disk collision through a later disk-disk collision. Time restarts at 0.
struct Segment {
  PhaseState start;
  std::vector<EventRecord> events;  // re-simulated from start
  LongSeq long_seq;
  ShortSeq short_seq;
};

/// Event indices refer to traj.events and must both be disk-disk collisions
/// (they may coincide).
/// Throws SequenceChanged if re-simulation from the midpoint departs from the
/// recorded event sequence.
Segment extract_segment(const Table& table, const Trajectory& traj, std::size_t first_event,
                        std::size_t last_event);

using Perturbation = std::array<Vec2, 2>;

/// Configuration perturbation at the segment start for a null-space vector.
Perturbation perturbation_from_null(const Segment& seg, const Eigen::VectorXd& x);

struct AdvanceMeasurement {
  std::size_t collision = 0;  // index into seg.long_seq.collisions
  Perturbation w;
  double delta = 0.0;
  double alpha = 0.0;     // Richardson-extrapolated from delta and delta/2
  double residual = 0.0;  // |alpha(delta) - alpha(delta/2)|
};

/// alpha = (tau - tau') / delta where tau' is the collision time of the run started
/// from (q + delta w, v). Throws SequenceChanged when the perturbed run follows a
/// different event sequence.
AdvanceMeasurement measure_advance(const Table& table, const Segment& seg, std::size_t collision,
                                   const Perturbation& w, double delta = 1e-6);

/// Advances of every collision of the segment for one perturbation, Richardson-extrapolated.
std::vector<double> measure_advances(const Table& table, const Segment& seg, const Perturbation& w,
                                     double delta = 1e-6);

struct EndpointDeviation {
  double delta = 0.0;
  double full = 0.0;  // |v_end(delta) - v_end|
  double half = 0.0;  // same with delta / 2
  /// Deviation per unit perturbation: O(1) off the neutral space, O(delta) or smaller on it.
  double slope() const { return full / delta; }
  /// Empirical order of the deviation in delta.
  double order() const;
};

EndpointDeviation endpoint_velocity_deviation(const Table& table, const Segment& seg, const Perturbation& w,
                                              double delta = 1e-6);

struct SuffRow {
  std::size_t segment_id = 0;
  std::size_t n_islands = 0;
  int rich_case = 0;
  int nullity = 0;
  double gap_ratio = 0.0;
  SufficiencyKind verdict = SufficiencyKind::Degenerate;
};

/// Slides a window of `window` islands along the short sequence of the run.
std::vector<SuffRow> sufficiency_report(const ShortSeq& seq, std::size_t window = 3, double tol = 1e-8);

/// Windows of one class: 2-island windows across a reflection junction
/// (expected nullity 2) or rich 3-island windows (expected nullity 1).
struct SuffClassTally {
  std::size_t segments = 0;
  std::size_t conforming = 0;
  std::size_t flagged = 0;  // non-conforming with a gap or degeneracy diagnostic
  std::vector<std::size_t> unflagged;  // first island of each unexplained window
  double conformity() const { return segments ? static_cast<double>(conforming) / segments : 0.0; }
};

struct SuffSuite {
  SuffClassTally reflection;
  SuffClassTally rich;
  bool passed(double min_conformity = 0.99) const;
};

SuffSuite sufficiency_suite(const ShortSeq& seq, double tol = 1e-8);

std::string suff_csv_header();
std::string to_csv_row(const SuffRow& row);

}  // namespace twoball
