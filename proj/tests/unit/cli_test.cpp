#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "twoball/cli.hpp"
#include "twoball/error.hpp"

using namespace twoball;
using namespace twoball::cli;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result call(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("twoball_cli_" + name)).string();
}

std::string write_file(const std::string& name, const std::string& text) {
  const std::string p = temp_path(name);
  std::ofstream(p) << text;
  return p;
}

std::string slurp(const std::string& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

ErrorCode code_of(const std::string& text) {
  std::istringstream in(text);
  try {
    parse_config(in);
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error for: " << text;
  return ErrorCode::InvalidArgument;
}

std::string message_of(const std::string& text) {
  std::istringstream in(text);
  try {
    parse_config(in);
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST(Config, EmptyFileGivesDefaults) {
  std::istringstream in("");
  const RunConfig c = parse_config(in);
  EXPECT_FALSE(c.polygon);
  EXPECT_EQ(c.radius, 0.1);
  EXPECT_EQ(c.seed, 1u);
  EXPECT_EQ(c.format, Format::Csv);
}

TEST(Config, ParsesEveryKind) {
  std::istringstream in(
      "# run\n"
      "polygon = right-30-60\n"
      "  radius=0.05  \n"
      "seed = 42 # pinned\n"
      "events = 1000\n"
      "format = json\n"
      "tol-vertex = 1e-9\n"
      "tol-conformity = 0.95\n");
  const RunConfig c = parse_config(in);
  EXPECT_EQ(c.polygon, PolygonId::Right3060);
  EXPECT_EQ(c.radius, 0.05);
  EXPECT_EQ(c.seed, 42u);
  EXPECT_EQ(c.events, 1000u);
  EXPECT_EQ(c.format, Format::Json);
  EXPECT_EQ(c.tol.vertex, 1e-9);
  EXPECT_EQ(c.tol_conformity, 0.95);
}

TEST(Config, Errors) {
  EXPECT_EQ(code_of("polygon = square\nradius 0.1\n"), ErrorCode::ParseError);
  EXPECT_NE(message_of("polygon = square\nradius 0.1\n").find("line 2"), std::string::npos);
  EXPECT_EQ(code_of("= 3\n"), ErrorCode::ParseError);
  EXPECT_EQ(code_of("seed =\n"), ErrorCode::ParseError);
  EXPECT_EQ(code_of("\n\nseed = -3\n"), ErrorCode::ParseError);
  EXPECT_NE(message_of("\n\nseed = -3\n").find("line 3"), std::string::npos);
  EXPECT_EQ(code_of("polygon = pentagon\n"), ErrorCode::ParseError);
  EXPECT_EQ(code_of("format = xml\n"), ErrorCode::ParseError);

  EXPECT_EQ(code_of("radus = 0.1\n"), ErrorCode::UnknownKey);
  EXPECT_NE(message_of("radus = 0.1\n").find("'radius'"), std::string::npos);
  EXPECT_NE(message_of("tol-vertx = 1\n").find("'tol-vertex'"), std::string::npos);
  EXPECT_NE(message_of("polygn = square\n").find("'polygon'"), std::string::npos);
}

TEST(Config, NearestKey) {
  EXPECT_EQ(nearest_key("seeed"), "seed");
  EXPECT_EQ(nearest_key("renorm_every"), "renorm-every");
  EXPECT_EQ(nearest_key("radius"), "radius");
  RunConfig c;
  EXPECT_THROW(set_key(c, "nope", "1"), Error);
}

TEST(Config, MissingFile) {
  EXPECT_THROW(load_config(temp_path("does_not_exist.cfg")), Error);
}

TEST(Cli, EmptyFileAndFullFlags) {
  const std::string cfg = write_file("empty.cfg", "");
  const Result r = call({"ons", "--config", cfg, "--polygon", "square", "--radius", "0.1"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("Split"), std::string::npos);
}

TEST(Cli, FlagWinsOverFile) {
  const std::string cfg = write_file("square.cfg", "polygon = square\n");
  const Result file_only = call({"ons", "--config", cfg});
  EXPECT_NE(file_only.out.find("cylinders: C_e C_r1\n"), std::string::npos);
  const Result flagged = call({"ons", "--config", cfg, "--polygon", "eq-triangle"});
  EXPECT_NE(flagged.out.find("cylinders: C_e C_r1 C_r2\n"), std::string::npos);
  EXPECT_NE(flagged.out.find("NoSplit"), std::string::npos);
}

TEST(Cli, OnsPrintsBases) {
  const Result r = call({"ons", "--polygon", "square"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("\nSplit\n"), std::string::npos);
  EXPECT_NE(r.out.find("K1 basis:"), std::string::npos);
  EXPECT_NE(r.out.find("K2 basis:"), std::string::npos);
  for (const char* p : {"eq-triangle", "right-isoceles", "right-30-60"}) {
    const Result o = call({"ons", "--polygon", p});
    EXPECT_EQ(o.code, 0);
    EXPECT_NE(o.out.find("NoSplit"), std::string::npos) << p;
  }
}

TEST(Cli, LiftCheck) {
  const Result r = call({"lift-check", "--polygon", "eq-triangle", "--radius", "0.1", "--events", "10000", "--seed", "7"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("where-lemma matches: 100%"), std::string::npos);
}

TEST(Cli, ValidationErrors) {
  const Result big = call({"simulate", "--radius", "0.4", "--polygon", "square"});
  EXPECT_EQ(big.code, 1);
  EXPECT_NE(big.err.find("RadiusTooLarge"), std::string::npos);

  EXPECT_EQ(call({"simulate"}).code, 1);
  EXPECT_EQ(call({}).code, 1);
  EXPECT_EQ(call({"simulate", "--polygon", "hexagon"}).code, 1);
  EXPECT_EQ(call({"simulate", "--polygon", "square", "--events", "ten"}).code, 1);
  EXPECT_EQ(call({"lyapunov", "--polygon", "square", "--time", "3"}).code, 1);
  EXPECT_EQ(call({"lyapunov", "--polygon", "square", "--delta0", "1e-3"}).code, 1);

  const Result typo = call({"simulate", "--polygn", "square"});
  EXPECT_EQ(typo.code, 1);
  EXPECT_NE(typo.err.find("did you mean '--polygon'"), std::string::npos);

  const std::string cfg = write_file("typo.cfg", "polygon = square\nsed = 3\n");
  const Result bad = call({"simulate", "--config", cfg});
  EXPECT_EQ(bad.code, 1);
  EXPECT_NE(bad.err.find("line 2"), std::string::npos);
  EXPECT_NE(bad.err.find("'seed'"), std::string::npos);
}

TEST(Cli, VerificationFailureExitsTwo) {
  const Result r = call({"suff", "--polygon", "square", "--events", "5000", "--tol-conformity", "1"});
  EXPECT_EQ(r.code, 0) << r.out;
  const Result strict = call({"lift-check", "--polygon", "square", "--events", "2000", "--tol-semiconj", "1e-30"});
  EXPECT_EQ(strict.code, 2);
  EXPECT_NE(strict.out.find("lift-check: FAIL"), std::string::npos);
}

TEST(Cli, SimulateWritesCsvAndJson) {
  const Result r = call({"simulate", "--polygon", "right-isoceles", "--events", "50", "--seed", "3"});
  EXPECT_EQ(r.code, 0);
  std::istringstream lines(r.out);
  std::string line;
  std::size_t n = 0;
  while (std::getline(lines, line)) ++n;
  EXPECT_EQ(n, 51u);
  EXPECT_EQ(r.out.rfind("event_index,time,", 0), 0u);

  const std::string json = temp_path("sim.json");
  EXPECT_EQ(call({"simulate", "--polygon", "right-isoceles", "--events", "50", "--seed", "3", "--format", "json",
                  "--out", json})
                .code,
            0);
  const auto doc = nlohmann::json::parse(slurp(json));
  ASSERT_EQ(doc.size(), 50u);
  EXPECT_EQ(doc[0]["event_index"], 0);
  EXPECT_TRUE(doc[0]["time"].is_number());
}

TEST(Cli, TimeBudget) {
  const Result r = call({"simulate", "--polygon", "square", "--time", "2.5"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.err.find("events: "), std::string::npos);
}

TEST(Cli, RerunsAreByteIdentical) {
  for (const char* cmd : {"simulate", "suff", "sequence"}) {
    const std::string a = temp_path(std::string(cmd) + "_a.csv"), b = temp_path(std::string(cmd) + "_b.csv");
    for (const auto& p : {a, b}) {
      EXPECT_EQ(call({cmd, "--polygon", "right-30-60", "--events", "3000", "--seed", "11", "--out", p}).code, 0);
    }
    EXPECT_FALSE(slurp(a).empty());
    EXPECT_EQ(slurp(a), slurp(b)) << cmd;
  }
}
