#pragma once

// Event-driven flow of two equal hard disks in an eroded polygon.

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "twoball/group.hpp"
#include "twoball/table.hpp"
#include "twoball/vec2.hpp"

namespace twoball {

struct PhaseState {
  std::array<Vec2, 2> q;
  std::array<Vec2, 2> v;
  double t = 0.0;

  double energy() const { return norm2(v[0]) + norm2(v[1]); }
  /// Free flight by dt (no event handling).
  PhaseState advanced(double dt) const {
    PhaseState s = *this;
    s.q[0] += dt * v[0];
    s.q[1] += dt * v[1];
    s.t += dt;
    return s;
  }
};

enum class EventType : std::uint8_t { WallHit, BallBall, Singular };
enum class SingularKind : std::uint8_t { None, Corner, Tangential, Simultaneous };

struct EventRecord {
  std::size_t index = 0;
  double time = 0.0;
  EventType type = EventType::WallHit;
  int ball = -1;     // 0 or 1 for wall hits
  int side_id = -1;  // for wall hits
  GroupElement reflection;  // side element for wall hits, identity otherwise
  SingularKind singular = SingularKind::None;
  PhaseState post;  // state right after the event
};

std::string_view event_type_name(const EventRecord& e);

/// Pending event found by next_event().
struct PendingEvent {
  double dt = 0.0;
  EventType type = EventType::WallHit;
  int ball = -1;
  int side_id = -1;
  SingularKind singular = SingularKind::None;
};

struct Tolerances {
  double event_tie = 1e-12;      // candidate times closer than this are simultaneous
  double vertex = 1e-10;         // impact closer than this to a vertex is a corner hit
  double tangential = 1e-10;     // |normal relative speed| below this at contact
  double contact = 1e-10;        // contact distance tolerance for collide_balls
};

PendingEvent next_event(const Table& table, const PhaseState& state, const Tolerances& tol = {});

/// Equal-mass elastic collision; requires contact and approach.
PhaseState collide_balls(const Table& table, const PhaseState& state, double contact_tol = 1e-10);

/// Specular reflection of one ball off a side; requires the ball on the side and moving out.
PhaseState reflect_wall(const Table& table, const PhaseState& state, int ball, int side_id,
                        double side_tol = 1e-10);

struct Budget {
  std::optional<std::size_t> events;
  std::optional<double> max_time;  // absolute stop time; the flow ends exactly there
};

struct RunStats {
  std::size_t events = 0;
  std::size_t ball_ball = 0;
  std::size_t wall_hits = 0;
  double max_energy_drift = 0.0;
  std::size_t constraint_violations = 0;
  bool singular_halt = false;
};

/// Stepwise simulator; owns its state.
class Simulator {
 public:
  Simulator(const Table& table, PhaseState initial, Tolerances tol = {});

  const PhaseState& state() const { return state_; }
  const RunStats& stats() const { return stats_; }
  bool halted() const { return halted_; }
  std::size_t event_count() const { return stats_.events; }

  /// Time of the next event (absolute); cached until the state changes.
  double next_event_time();
  /// Process the next event; a singular event halts the simulator.
  EventRecord step();
  /// Flow freely to absolute time t; t must not exceed next_event_time().
  void flow_to(double t);

 private:
  void check_constraints();

  const Table* table_;
  Tolerances tol_;
  PhaseState state_;
  double energy0_;
  std::optional<PendingEvent> pending_;
  RunStats stats_;
  bool halted_ = false;
};

struct Trajectory {
  PhaseState initial;
  std::vector<EventRecord> events;
  PhaseState final_state;
  RunStats stats;
};

using EventObserver = std::function<void(const EventRecord&)>;

/// Runs until the budget is exhausted or a singular event halts the orbit (the
/// singular event is the terminal record).
RunStats simulate(const Table& table, const PhaseState& initial, const Budget& budget,
                  const EventObserver& observer, PhaseState* final_state = nullptr,
                  const Tolerances& tol = {});
Trajectory simulate(const Table& table, const PhaseState& initial, const Budget& budget,
                    const Tolerances& tol = {});

using Rng = std::mt19937_64;

Vec2 sample_point(const Table& table, Rng& rng);
/// Liouville sample: positions uniform on the admissible configurations, velocity
/// uniform on the unit 3-sphere.
PhaseState sample_state(const Table& table, Rng& rng);

/// Time-reversed copy: velocities negated.
PhaseState reversed(const PhaseState& s);

std::string trajectory_csv_header();
std::string to_csv_row(const EventRecord& e);

}  // namespace twoball
