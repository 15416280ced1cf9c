#pragma once

// Forward/backward round trip of the two-disk flow in extended precision.
//
// Chaotic amplification at disk-disk collisions (roughly one decimal digit
// per collision) makes a double-precision round trip over 10^3 events
// meaningless, so the round trip is carried out with a multiprecision scalar
// on the same table (vertex coordinates taken as exact) and the same event
// rules as the double simulator.

#include <cstddef>

#include "twoball/dynamics.hpp"

namespace twoball {

struct ReplayReport {
  std::size_t events_forward = 0;
  std::size_t events_backward = 0;
  std::size_t ball_ball = 0;
  double max_error = 0.0;    // max over positions and velocities after the round trip
  double log10_error = 0.0;  // computed in the working precision
  int digits = 0;            // decimal digits of the scalar used
  bool completed = false;    // both legs ran to the stop time without a degenerate event
};

/// Runs n events forward from s, stops half-way to the next event, negates the
/// velocities and flows for the same time.
ReplayReport reverse_replay(const Table& table, const PhaseState& s, std::size_t n_events);

/// Same round trip in double precision, for comparison.
ReplayReport reverse_replay_double(const Table& table, const PhaseState& s, std::size_t n_events);

}  // namespace twoball
