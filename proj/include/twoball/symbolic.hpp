#pragma once

// Long and short symbolic collision sequences.
//
// A long sequence is b J1 b J2 ... Jk b where b is a disk-disk collision and
// Ji = (g(1), g(2)) collects the wall reflections of each ball between two
// consecutive collisions (later reflections on the left, so g(k) maps the
// outgoing velocity of ball k onto its incoming velocity at the next b).
// The short sequence merges maximal runs joined by simple junctions
// (g(1) == g(2)) into islands (b, s).

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "twoball/dynamics.hpp"
#include "twoball/group.hpp"

namespace twoball {

struct Junction {
  std::array<GroupElement, 2> g;

  bool simple() const { return g[0] == g[1]; }
  /// g(2) = hat * g(1)
  GroupElement hat() const { return compose(g[1], inverse(g[0])); }
  /// g(2) * bar = g(1)
  GroupElement bar() const { return compose(inverse(g[1]), g[0]); }
  bool operator==(const Junction&) const = default;
};

struct Collision {
  std::size_t event_index = 0;
  double time = 0.0;
  std::array<Vec2, 2> v_before;
  std::array<Vec2, 2> v_after;
  PhaseState post;
};

struct LongSeq {
  int order_n = 0;
  std::vector<Collision> collisions;  // b symbols
  std::vector<Junction> junctions;    // junctions[i] sits between collisions i and i+1
};

/// Trims to the first and last disk-disk collision of the events in [begin, end).
/// `before` is the state preceding events[begin].
LongSeq long_sequence(const PhaseState& before, const std::vector<EventRecord>& events,
                      std::size_t begin = 0, std::size_t end = static_cast<std::size_t>(-1));
LongSeq long_sequence(const Trajectory& traj);

/// Sub-sequence between collisions first and last (inclusive).
LongSeq slice(const LongSeq& seq, std::size_t first, std::size_t last);

/// max over junctions and balls of |g(k) v_after - v_before(next)|.
double transport_deviation(const LongSeq& seq);

struct Island {
  std::size_t first = 0;  // index of its first collision in the long sequence
  std::size_t count = 1;
  GroupElement s;
  std::optional<std::array<Vec2, 2>> entry;  // velocities just before the first collision
  std::optional<std::array<Vec2, 2>> exit;   // velocities just after the last collision
  double entry_time = 0.0;
};

struct ShortSeq {
  int order_n = 0;
  std::vector<Island> islands;
  std::vector<Junction> junctions;  // junctions[i] joins islands i and i+1; never simple
};

ShortSeq compress_to_short(const LongSeq& seq);
/// Re-expands islands into simple junctions (velocities dropped).
LongSeq to_long(const ShortSeq& seq);
/// Island counts, island elements and junctions agree.
bool same_structure(const ShortSeq& a, const ShortSeq& b);

struct RichWitness {
  std::size_t junction = 0;  // index i of the first junction of the pattern J_i (b,s) J_{i+1}
  int rich_case = 1;
};

/// Throws TooShort with fewer than 3 islands.
std::optional<RichWitness> is_rich(const ShortSeq& seq);

enum class PoornessClass { OPoor, RPoor, Rich, Mixed };
std::string_view poorness_name(PoornessClass c);

struct Poorness {
  PoornessClass cls = PoornessClass::Mixed;
  std::optional<int> axis;          // R_poor: axis index of the first hat element
  std::optional<RichWitness> rich;  // Rich: the witness pattern
};

Poorness poorness_class(const LongSeq& seq);
Poorness poorness_class(const ShortSeq& seq);

/// Time-reversed short sequence: island and junction order reversed, island
/// elements and junction elements inverted (hat and bar swap roles), entry and
/// exit velocities negated and exchanged.
ShortSeq reverse(const ShortSeq& seq);

/// Compact form, e.g. "b [R0,e] (b2,s=r1) [R0,r2] b".
std::string to_text(const ShortSeq& seq);
ShortSeq parse_short(const std::string& text, int order_n);

}  // namespace twoball
