#include "twoball/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <nlohmann/json.hpp>
#include <ostream>
#include <sstream>

#include "twoball/analysis.hpp"
#include "twoball/error.hpp"
#include "twoball/lifting.hpp"
#include "twoball/sufficiency.hpp"
#include "twoball/symbolic.hpp"
#include "twoball/table.hpp"

namespace twoball::cli {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

// Error text without the leading code name.
std::string detail(const Error& e) {
  const std::string w = e.what();
  const std::string prefix = std::string(to_string(e.code())) + ": ";
  return w.rfind(prefix, 0) == 0 ? w.substr(prefix.size()) : w;
}

double to_double(std::string_view key, std::string_view v) {
  double x = 0.0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || p != v.data() + v.size()) {
    throw Error(ErrorCode::InvalidArgument, std::string(key) + ": not a number: '" + std::string(v) + "'");
  }
  return x;
}

std::uint64_t to_count(std::string_view key, std::string_view v) {
  std::uint64_t x = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || p != v.data() + v.size()) {
    throw Error(ErrorCode::InvalidArgument,
                std::string(key) + ": not a non-negative integer: '" + std::string(v) + "'");
  }
  return x;
}

double positive(std::string_view key, std::string_view v) {
  const double x = to_double(key, v);
  if (!(x > 0.0)) throw Error(ErrorCode::InvalidArgument, std::string(key) + " must be positive");
  return x;
}

using Setter = std::function<void(RunConfig&, std::string_view key, std::string_view value)>;

const std::vector<std::pair<std::string, Setter>>& setters() {
  static const std::vector<std::pair<std::string, Setter>> s = {
      {"polygon", [](RunConfig& c, auto, auto v) { c.polygon = parse_polygon(v); }},
      {"radius", [](RunConfig& c, auto k, auto v) { c.radius = to_double(k, v); }},
      {"seed", [](RunConfig& c, auto k, auto v) { c.seed = to_count(k, v); }},
      {"events", [](RunConfig& c, auto k, auto v) { c.events = to_count(k, v); }},
      {"time", [](RunConfig& c, auto k, auto v) { c.time = positive(k, v); }},
      {"out", [](RunConfig& c, auto, auto v) { c.out = std::string(v); }},
      {"format",
       [](RunConfig& c, auto, auto v) {
         if (v == "csv") {
           c.format = Format::Csv;
         } else if (v == "json") {
           c.format = Format::Json;
         } else {
           throw Error(ErrorCode::InvalidArgument, "format must be csv or json, got '" + std::string(v) + "'");
         }
       }},
      {"window", [](RunConfig& c, auto k, auto v) { c.window = to_count(k, v); }},
      {"seeds", [](RunConfig& c, auto k, auto v) { c.seeds = to_count(k, v); }},
      {"bins", [](RunConfig& c, auto k, auto v) { c.bins = static_cast<int>(to_count(k, v)); }},
      {"batches", [](RunConfig& c, auto k, auto v) { c.batches = to_count(k, v); }},
      {"renorm-every", [](RunConfig& c, auto k, auto v) { c.renorm_every = to_count(k, v); }},
      {"delta0", [](RunConfig& c, auto k, auto v) { c.delta0 = positive(k, v); }},
      {"tol-event-tie", [](RunConfig& c, auto k, auto v) { c.tol.event_tie = positive(k, v); }},
      {"tol-vertex", [](RunConfig& c, auto k, auto v) { c.tol.vertex = positive(k, v); }},
      {"tol-tangential", [](RunConfig& c, auto k, auto v) { c.tol.tangential = positive(k, v); }},
      {"tol-contact", [](RunConfig& c, auto k, auto v) { c.tol.contact = positive(k, v); }},
      {"tol-neutral", [](RunConfig& c, auto k, auto v) { c.tol_neutral = positive(k, v); }},
      {"tol-semiconj", [](RunConfig& c, auto k, auto v) { c.tol_semiconj = positive(k, v); }},
      {"tol-conformity",
       [](RunConfig& c, auto k, auto v) {
         const double x = to_double(k, v);
         if (!(x >= 0.0 && x <= 1.0)) throw Error(ErrorCode::InvalidArgument, "tol-conformity must lie in [0, 1]");
         c.tol_conformity = x;
       }},
  };
  return s;
}

std::size_t edit_distance(std::string_view a, std::string_view b) {
  std::vector<std::size_t> row(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) row[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t up = row[j];
      row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + (a[i - 1] == b[j - 1] ? 0 : 1)});
      diag = up;
    }
  }
  return row[b.size()];
}

// ---------------------------------------------------------------------------
// Output

struct Output {
  std::vector<std::string> report;  // human-readable lines, always on stdout
  std::string header;               // data table, empty when there is none
  std::vector<std::string> rows;
  bool data_to_stdout = false;  // when no --out is given
  int code = 0;
};

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

nlohmann::json cell_json(const std::string& s) {
  if (s.empty()) return nullptr;
  std::int64_t n = 0;
  if (const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), n);
      ec == std::errc() && p == s.data() + s.size()) {
    return n;
  }
  double x = 0.0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
  if (ec == std::errc() && p == s.data() + s.size()) return x;
  return s;
}

void write_data(std::ostream& os, const Output& o, Format f) {
  if (f == Format::Csv) {
    os << o.header << '\n';
    for (const auto& r : o.rows) os << r << '\n';
    return;
  }
  const auto keys = split_csv(o.header);
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& r : o.rows) {
    const auto cells = split_csv(r);
    nlohmann::ordered_json obj;
    for (std::size_t i = 0; i < keys.size(); ++i) obj[keys[i]] = cell_json(i < cells.size() ? cells[i] : "");
    arr.push_back(std::move(obj));
  }
  os << arr.dump(1) << '\n';
}

std::string fmt(const char* f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

std::string percent(std::size_t hit, std::size_t total) {
  if (total == 0) return "n/a (0 cases)";
  const std::string pct = hit == total ? "100" : fmt("%.4f", 100.0 * static_cast<double>(hit) / total);
  return pct + "% (" + std::to_string(hit) + "/" + std::to_string(total) + ")";
}

// ---------------------------------------------------------------------------
// Subcommands

struct Context {
  RunConfig cfg;
  Table table;
};

Budget budget_of(const RunConfig& c, std::size_t default_events) {
  Budget b;
  if (c.time) {
    b.max_time = *c.time;
    if (c.events) b.events = *c.events;
  } else {
    b.events = c.events.value_or(default_events);
  }
  return b;
}

Trajectory run_trajectory(const Context& ctx, std::size_t default_events) {
  Rng rng(ctx.cfg.seed);
  return simulate(ctx.table, sample_state(ctx.table, rng), budget_of(ctx.cfg, default_events), ctx.cfg.tol);
}

std::string stats_line(const RunStats& s) {
  return "events: " + std::to_string(s.events) + ", ball-ball: " + std::to_string(s.ball_ball) +
         ", energy drift: " + fmt("%.3g", s.max_energy_drift) +
         ", constraint violations: " + std::to_string(s.constraint_violations) +
         (s.singular_halt ? ", halted at a singular event" : "");
}

Output cmd_simulate(const Context& ctx) {
  Output o;
  const Trajectory traj = run_trajectory(ctx, 10000);
  o.header = trajectory_csv_header();
  for (const auto& e : traj.events) o.rows.push_back(to_csv_row(e));
  o.data_to_stdout = true;
  o.report.push_back(stats_line(traj.stats));
  return o;
}

std::string long_text(const LongSeq& seq) {
  std::string s;
  for (std::size_t i = 0; i < seq.collisions.size(); ++i) {
    if (i > 0) {
      const Junction& j = seq.junctions[i - 1];
      s += " [" + to_token(j.g[0]) + "," + to_token(j.g[1]) + "] ";
    }
    s += "b";
  }
  return s;
}

Output cmd_sequence(const Context& ctx) {
  Output o;
  const Trajectory traj = run_trajectory(ctx, 10000);
  const LongSeq lg = long_sequence(traj);
  const ShortSeq sh = compress_to_short(lg);
  const Poorness cls = poorness_class(sh);
  o.report.push_back(stats_line(traj.stats));
  o.report.push_back("long: " + long_text(lg));
  o.report.push_back("short: " + to_text(sh));
  o.report.push_back("collisions: " + std::to_string(lg.collisions.size()) +
                     ", islands: " + std::to_string(sh.islands.size()));
  std::string c = "class: " + std::string(poorness_name(cls.cls));
  if (cls.axis) c += " (axis " + std::to_string(*cls.axis) + ")";
  if (cls.rich) {
    c += " (junction " + std::to_string(cls.rich->junction) + ", case " + std::to_string(cls.rich->rich_case) + ")";
  }
  o.report.push_back(c);

  o.header = "collision,event_index,time,next_g1,next_g2";
  for (std::size_t i = 0; i < lg.collisions.size(); ++i) {
    const Collision& col = lg.collisions[i];
    std::string row = std::to_string(i) + "," + std::to_string(col.event_index) + "," + fmt("%.17g", col.time);
    if (i < lg.junctions.size()) {
      row += "," + to_token(lg.junctions[i].g[0]) + "," + to_token(lg.junctions[i].g[1]);
    } else {
      row += ",,";
    }
    o.rows.push_back(row);
  }
  return o;
}

Output cmd_lift_check(const Context& ctx) {
  Output o;
  const Trajectory traj = run_trajectory(ctx, 10000);
  const UnfoldingAtlas atlas = build_atlas(ctx.table);
  const LiftedTrajectory lifted = lift_trajectory(ctx.table, atlas, traj);
  const SemiConjugacyReport sc = verify_semiconjugacy(ctx.table, atlas, traj, lifted);
  const LiftCheckReport lc = lift_check(ctx.table, atlas, traj, lifted);

  o.report.push_back(stats_line(traj.stats));
  o.report.push_back("semi-conjugacy max deviation: " + fmt("%.3g", sc.max_deviation()) + " over " +
                     std::to_string(sc.samples) + " samples, label mismatches: " +
                     std::to_string(sc.label_mismatches));
  o.report.push_back("cylinder labels: " + percent(lc.label_matches, lc.collisions));
  o.report.push_back("where-lemma matches: " + percent(lc.where_matches, lc.where_pairs));
  o.report.push_back("island constancy: " + percent(lc.islands_constant, lc.islands));
  o.report.push_back("reflection sandwiches: " + percent(lc.sandwiches_same, lc.sandwiches));
  o.report.push_back("rotation steps: " + percent(lc.rotation_steps_ok, lc.rotation_steps));
  o.report.push_back("O-poor windows: " + percent(lc.o_poor_windows_ok, lc.o_poor_windows));
  o.report.push_back("R-poor windows: " + percent(lc.r_poor_windows_ok, lc.r_poor_windows));
  const bool ok = lc.all_ok() && sc.label_mismatches == 0 && sc.max_deviation() < ctx.cfg.tol_semiconj;
  o.report.push_back(ok ? "lift-check: PASS" : "lift-check: FAIL");
  o.code = ok ? 0 : 2;

  o.header = lifted_csv_header();
  for (const auto& e : lifted.events) o.rows.push_back(to_csv_row(e));
  return o;
}

void tally_lines(Output& o, const char* name, const SuffClassTally& t) {
  std::string s = std::string(name) + ": " + percent(t.conforming, t.segments) + " conforming, " +
                  std::to_string(t.flagged) + " flagged, " + std::to_string(t.unflagged.size()) + " unexplained";
  if (!t.unflagged.empty()) {
    s += " (first island";
    for (std::size_t i = 0; i < std::min<std::size_t>(t.unflagged.size(), 10); ++i) {
      s += " " + std::to_string(t.unflagged[i]);
    }
    s += ")";
  }
  o.report.push_back(s);
}

Output cmd_suff(const Context& ctx) {
  Output o;
  if (ctx.cfg.window < 2) throw Error(ErrorCode::InvalidArgument, "window must be at least 2");
  const Trajectory traj = run_trajectory(ctx, 100000);
  const ShortSeq sh = compress_to_short(long_sequence(traj));
  const SuffSuite suite = sufficiency_suite(sh, ctx.cfg.tol_neutral);
  o.report.push_back(stats_line(traj.stats));
  o.report.push_back("islands: " + std::to_string(sh.islands.size()));
  tally_lines(o, "reflection junctions (nullity 2)", suite.reflection);
  tally_lines(o, "rich windows (nullity 1)", suite.rich);
  const bool ok = suite.passed(ctx.cfg.tol_conformity);
  o.report.push_back(ok ? "suff: PASS" : "suff: FAIL");
  o.code = ok ? 0 : 2;

  o.header = suff_csv_header();
  if (sh.islands.size() >= ctx.cfg.window) {
    for (const auto& r : sufficiency_report(sh, ctx.cfg.window, ctx.cfg.tol_neutral)) o.rows.push_back(to_csv_row(r));
  }
  return o;
}

Output cmd_lyapunov(const Context& ctx) {
  Output o;
  if (ctx.cfg.time) throw Error(ErrorCode::InvalidArgument, "lyapunov takes an event budget, not --time");
  LyapunovOptions opt;
  opt.n_events = ctx.cfg.events.value_or(opt.n_events);
  opt.renorm_every = ctx.cfg.renorm_every;
  opt.delta0 = ctx.cfg.delta0;
  opt.batches = ctx.cfg.batches;
  const LyapunovReport rep = lyapunov_estimate(ctx.table, ctx.cfg.seed, opt);
  const LyapunovControl ctl = lyapunov_control(ctx.table.polygon, ctx.cfg.seed, opt);
  o.report.push_back("lambda: " + fmt("%.6g", rep.lambda) + " +- " + fmt("%.3g", rep.stderr_) + " (" +
                     std::to_string(rep.renormalizations) + " renormalizations, time " +
                     fmt("%.6g", rep.total_time) + ", restarts " + std::to_string(rep.restarts) + ")");
  o.report.push_back("one-ball control: " + fmt("%.3g", ctl.lambda) + " +- " + fmt("%.3g", ctl.stderr_));
  o.report.push_back(std::string("positive beyond 5 stderr: ") + (rep.lambda > 5.0 * rep.stderr_ ? "yes" : "no") +
                     ", control within 3 stderr: " + (std::abs(ctl.lambda) < 3.0 * ctl.stderr_ ? "yes" : "no"));
  o.header = lyapunov_csv_header();
  o.rows = lyapunov_csv_rows(rep);
  return o;
}

Output cmd_ergodicity(const Context& ctx) {
  Output o;
  if (ctx.cfg.time) throw Error(ErrorCode::InvalidArgument, "ergodicity takes an event budget, not --time");
  ErgodicityOptions opt;
  opt.n_events = ctx.cfg.events.value_or(opt.n_events);
  opt.bins = ctx.cfg.bins;
  opt.batches = ctx.cfg.batches;
  std::vector<std::uint64_t> seeds;
  for (std::size_t i = 0; i < ctx.cfg.seeds; ++i) seeds.push_back(ctx.cfg.seed + i);
  const ErgodicityReport rep = equidistribution_test(ctx.table, seeds, opt);
  for (const auto& s : rep.observables) {
    o.report.push_back(s.id + ": mean " + fmt("%.6g", s.mean) + ", spread " + fmt("%.3g", s.dispersion) +
                       ", Liouville " + fmt("%.6g", s.liouville) + ", max z " + fmt("%.3g", s.max_z));
  }
  std::string trend = "occupancy TV trend:";
  for (std::size_t i = 0; i < rep.trend_tv.size(); ++i) {
    trend += " " + std::to_string(rep.trend_events[i]) + ":" + fmt("%.4g", rep.trend_tv[i]);
  }
  o.report.push_back(trend);
  o.report.push_back("calibrated band: [" + fmt("%.4g", rep.band.lower) + ", " + fmt("%.4g", rep.band.upper) +
                     "] at n_eff " + fmt("%.4g", rep.band.n_eff) + ", factor " + fmt("%g", rep.band_factor));
  o.report.push_back("direction T2: " + fmt("%.4g", rep.direction_stat) + " (critical " +
                     fmt("%.4g", rep.direction_critical) + ", " + std::to_string(rep.direction_batches) +
                     " batches)");
  const auto yn = [](bool b) { return b ? "yes" : "no"; };
  o.report.push_back(std::string("averages agree: ") + yn(rep.averages_agree(opt.agreement_z)) +
                     ", trend non-increasing: " + yn(rep.trend_non_increasing()) +
                     ", within band: " + yn(rep.tv_within_band()) + ", direction uniform: " +
                     yn(rep.direction_uniform()) + ", singular halts: " + std::to_string(rep.singular_halts));
  o.header = ergodicity_csv_header();
  o.rows = ergodicity_csv_rows(rep);
  return o;
}

std::string basis_lines(const Basis4& b) {
  std::string s;
  for (Eigen::Index c = 0; c < b.cols(); ++c) {
    s += "  (";
    for (int r = 0; r < 4; ++r) s += (r ? ", " : "") + fmt("%.6f", b(r, c) == 0.0 ? 0.0 : b(r, c));
    s += ")\n";
  }
  return s;
}

Output cmd_ons(const Context& ctx) {
  Output o;
  const Group& grp = ctx.table.group;
  std::vector<Cylinder> cyl;
  std::string family = "cylinders:";
  for (const auto& g : grp.rotations()) {
    cyl.push_back(make_cylinder(g, ctx.table.contact));
    family += " C_" + to_token(g);
  }
  o.report.push_back(family);
  std::size_t pairs = 0, transversal_pairs = 0;
  for (std::size_t i = 0; i < cyl.size(); ++i) {
    for (std::size_t j = i + 1; j < cyl.size(); ++j) {
      ++pairs;
      if (transversal(cyl[i], cyl[j])) ++transversal_pairs;
    }
  }
  o.report.push_back("transversal pairs: " + percent(transversal_pairs, pairs));
  const OnsResult res = ons_split(cyl);
  if (res.split) {
    std::string sides = "sides:";
    for (int s : res.side) sides += " " + std::to_string(s);
    o.report.push_back("Split");
    o.report.push_back(sides);
    std::string k1 = basis_lines(res.k1), k2 = basis_lines(res.k2);
    k1.pop_back();
    k2.pop_back();
    o.report.push_back("K1 basis:\n" + k1);
    o.report.push_back("K2 basis:\n" + k2);
  } else {
    o.report.push_back("NoSplit");
  }
  o.code = transversal_pairs == pairs ? 0 : 2;
  return o;
}

const std::map<std::string, std::function<Output(const Context&)>>& commands() {
  static const std::map<std::string, std::function<Output(const Context&)>> m = {
      {"simulate", cmd_simulate},   {"sequence", cmd_sequence},       {"lift-check", cmd_lift_check},
      {"suff", cmd_suff},           {"lyapunov", cmd_lyapunov},       {"ergodicity", cmd_ergodicity},
      {"ons", cmd_ons},
  };
  return m;
}

const char* describe(const std::string& name) {
  if (name == "simulate") return "Simulate and write the event trajectory";
  if (name == "sequence") return "Long and short symbolic collision sequences and their class";
  if (name == "lift-check") return "Semi-conjugacy and cylinder prediction checks on the lifted run";
  if (name == "suff") return "Neutral-space nullities over sliding windows of the short sequence";
  if (name == "lyapunov") return "Largest Lyapunov exponent with a one-ball control";
  if (name == "ergodicity") return "Birkhoff averages and occupancy equidistribution over several seeds";
  return "Orthogonal splitting of the rotation cylinder family";
}

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& [name, _] : setters()) k.push_back(name);
    return k;
  }();
  return keys;
}

std::string nearest_key(std::string_view key) {
  std::string best;
  std::size_t best_d = static_cast<std::size_t>(-1);
  for (const auto& k : config_keys()) {
    const std::size_t d = edit_distance(key, k);
    if (d < best_d) {
      best_d = d;
      best = k;
    }
  }
  return best;
}

void set_key(RunConfig& cfg, std::string_view key, std::string_view value) {
  for (const auto& [name, set] : setters()) {
    if (name == key) {
      set(cfg, key, value);
      return;
    }
  }
  throw Error(ErrorCode::UnknownKey,
              "unknown key '" + std::string(key) + "'; did you mean '" + nearest_key(key) + "'?");
}

RunConfig parse_config(std::istream& in, RunConfig base) {
  std::string line;
  for (std::size_t no = 1; std::getline(in, line); ++no) {
    const std::string body = trim(line.substr(0, line.find('#')));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    const std::string where = "line " + std::to_string(no) + ": ";
    if (eq == std::string::npos) throw Error(ErrorCode::ParseError, where + "expected 'key = value'");
    const std::string key = trim(std::string_view(body).substr(0, eq));
    const std::string value = trim(std::string_view(body).substr(eq + 1));
    if (key.empty()) throw Error(ErrorCode::ParseError, where + "missing key");
    if (value.empty()) throw Error(ErrorCode::ParseError, where + "missing value for '" + key + "'");
    try {
      set_key(base, key, value);
    } catch (const Error& e) {
      throw Error(e.code() == ErrorCode::UnknownKey ? ErrorCode::UnknownKey : ErrorCode::ParseError,
                  where + detail(e));
    }
  }
  return base;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::InvalidArgument, "cannot open config file '" + path + "'");
  return parse_config(in);
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Two hard disks in integrable polygons: simulation and verification"};
  app.require_subcommand(1);
  std::string config_path;
  std::map<std::string, std::map<std::string, CLI::Option*>> flags;
  std::map<std::string, std::map<std::string, std::string>> values;
  for (const auto& [name, _] : commands()) {
    CLI::App* sub = app.add_subcommand(name, describe(name));
    sub->add_option("--config", config_path, "flat key = value file; flags win");
    for (const auto& key : config_keys()) {
      flags[name][key] = sub->add_option("--" + key, values[name][key]);
    }
  }

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    for (auto* sub : app.get_subcommands()) out << sub->help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << '\n';
    for (const auto& a : args) {
      if (a.rfind("--", 0) != 0) continue;
      const std::string key = a.substr(2, a.find('=') - 2);
      const auto& keys = config_keys();
      if (key != "config" && key != "help" && std::find(keys.begin(), keys.end(), key) == keys.end()) {
        err << "unknown flag '--" << key << "'; did you mean '--" << nearest_key(key) << "'?\n";
      }
    }
    return 1;
  }
  const std::string name = app.get_subcommands().front()->get_name();

  Output o;
  Context ctx{.cfg = {}, .table = {}};
  try {
    if (!config_path.empty()) ctx.cfg = load_config(config_path);
    for (const auto& key : config_keys()) {
      if (flags[name][key]->count() > 0) set_key(ctx.cfg, key, values[name][key]);
    }
    if (!ctx.cfg.polygon) throw Error(ErrorCode::InvalidArgument, "--polygon is required");
    ctx.table = make_table(*ctx.cfg.polygon, ctx.cfg.radius);
    o = commands().at(name)(ctx);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }

  const bool data_here = !o.header.empty() && ctx.cfg.out.empty() && o.data_to_stdout;
  if (!o.header.empty() && !ctx.cfg.out.empty()) {
    std::ofstream f(ctx.cfg.out, std::ios::binary);
    if (!f) {
      err << "error: cannot write '" << ctx.cfg.out << "'\n";
      return 1;
    }
    write_data(f, o, ctx.cfg.format);
  }
  if (data_here) {
    write_data(out, o, ctx.cfg.format);
    for (const auto& l : o.report) err << l << '\n';
  } else {
    for (const auto& l : o.report) out << l << '\n';
  }
  return o.code;
}

}  // namespace twoball::cli
