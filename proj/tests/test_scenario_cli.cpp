#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "largegame/scenario.hpp"

using namespace largegame;
namespace fs = std::filesystem;

namespace {

const char* kCongestion = R"y(space:
  labels: [left, right]
  matrix: [[0, 1], [1, 0]]
types:
  - name: commuter
    mass: 1
    payoff: "-(isact(left)*mu(left) + isact(right)*mu(right))"
measures:
  all_left: {left: 1}
  even: {left: 0.5, right: 0.5}
experiment:
  sizes: [4, 8]
  trials: 20
)y";

std::vector<Issue> issues_of(const std::string& text) {
  try {
    load_scenario_string(text);
  } catch (const ScenarioError& e) {
    return e.issues();
  }
  ADD_FAILURE() << "scenario loaded without errors";
  return {};
}

std::string replace(std::string text, const std::string& from, const std::string& to) {
  const auto pos = text.find(from);
  EXPECT_NE(pos, std::string::npos) << from;
  return pos == std::string::npos ? text : text.replace(pos, from.size(), to);
}

fs::path scratch_dir() {
  const fs::path dir = fs::temp_directory_path() / ("largegame_test_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  return dir;
}

fs::path write_file(const std::string& name, const std::string& text) {
  const fs::path p = scratch_dir() / name;
  std::ofstream(p) << text;
  return p;
}

struct Run {
  int code;
  std::string out;
};

Run cli(const std::string& args) {
  const fs::path out = scratch_dir() / "stdout.txt";
  const std::string cmd = std::string(LARGEGAME_CLI) + " " + args + " > " + out.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  std::ifstream in(out);
  std::stringstream buf;
  buf << in.rdbuf();
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, buf.str()};
}

std::string scenario(const char* name) { return std::string(SCENARIO_DIR) + "/" + name; }

}  // namespace

TEST(Scenario, LoadsCongestion) {
  const Scenario s = load_scenario_string(kCongestion);
  ASSERT_TRUE(s.limit);
  EXPECT_EQ(s.limit->size(), 1u);
  EXPECT_EQ(s.type_names, (std::vector<std::string>{"commuter"}));
  EXPECT_EQ(s.experiment.sizes, (std::vector<std::size_t>{4, 8}));
  EXPECT_EQ(s.experiment.trials, 20u);
  EXPECT_EQ(s.experiment.tol, 1e-6);
  EXPECT_EQ(s.measure("even"), Measure::uniform(s.space));
}

TEST(Scenario, MassSumNamesTheField) {
  const auto issues = issues_of(replace(kCongestion, "mass: 1", "mass: 0.9"));
  ASSERT_FALSE(issues.empty());
  EXPECT_EQ(issues[0].field, "types.mass");
  EXPECT_GT(issues[0].line, 0);
}

TEST(Scenario, UnknownLabelIsALocatedBindError) {
  const auto issues = issues_of(replace(kCongestion, "mu(right))", "mu(z))"));
  ASSERT_EQ(issues.size(), 1u);
  EXPECT_EQ(issues[0].field, "types[0].payoff");
  EXPECT_EQ(issues[0].line, 7);
  EXPECT_NE(issues[0].message.find("bind error at expression 1:"), std::string::npos) << issues[0].message;
  EXPECT_NE(issues[0].message.find("'z'"), std::string::npos) << issues[0].message;
}

TEST(Scenario, ReportsEveryProblem) {
  std::string text = replace(kCongestion, "trials: 20", "trials: -3\n  colour: red");
  text = replace(text, "matrix: [[0, 1], [1, 0]]", "matrix: [[0, 1], [2, 0]]");
  const auto issues = issues_of(text);
  EXPECT_GE(issues.size(), 3u);
  bool unknown = false, metric = false;
  for (const auto& i : issues) {
    unknown = unknown || i.field == "experiment.colour";
    metric = metric || i.field.rfind("space", 0) == 0;
  }
  EXPECT_TRUE(unknown);
  EXPECT_TRUE(metric);
}

TEST(Scenario, SyntaxErrorIsLocated) {
  const auto issues = issues_of("space:\n  labels: [a, b\n");
  ASSERT_EQ(issues.size(), 1u);
  EXPECT_GT(issues[0].line, 0);
}

TEST(Scenario, RoundTrip) {
  for (const char* name : {"congestion.yaml", "two_type.yaml", "dominant.yaml", "two_point.yaml"}) {
    const Scenario a = load_scenario(scenario(name));
    const std::string text = write_scenario(a);
    const Scenario b = load_scenario_string(text);
    EXPECT_EQ(write_scenario(b), text) << name;
    EXPECT_EQ(a.space->matrix(), b.space->matrix());
    EXPECT_EQ(a.measures.size(), b.measures.size());
    if (a.limit) {
      ASSERT_TRUE(b.limit);
      for (std::size_t t = 0; t < a.limit->size(); ++t) {
        EXPECT_EQ(a.limit->type(t).payoff.text(), b.limit->type(t).payoff.text());
        EXPECT_EQ(a.limit->type(t).mass, b.limit->type(t).mass);
        EXPECT_EQ(a.limit->type(t).feasible.members(), b.limit->type(t).feasible.members());
      }
    }
  }
}

TEST(Scenario, MissingFileIsAnIoError) {
  EXPECT_THROW(load_scenario("/nonexistent/scenario.yaml"), IoError);
}

TEST(Cli, Validate) {
  EXPECT_EQ(cli("validate " + scenario("congestion.yaml")).code, 0);
  const auto bad = cli("validate " + write_file("bad.yaml", replace(kCongestion, "mass: 1", "mass: 0.9")).string());
  EXPECT_EQ(bad.code, 1);
  EXPECT_NE(bad.out.find("types.mass"), std::string::npos) << bad.out;
  EXPECT_EQ(cli("validate /nonexistent/scenario.yaml").code, 3);
  EXPECT_EQ(cli("frobnicate").code, 1);
}

TEST(Cli, Metric) {
  const auto same = cli("metric " + scenario("two_point.yaml") + " --p dx --q dx");
  EXPECT_EQ(same.code, 0);
  EXPECT_EQ(same.out, "prohorov 0\nbl 0\n");
  const auto far = cli("metric " + scenario("two_point.yaml") + " --p dx --q dy");
  EXPECT_EQ(far.out, "prohorov 1\nbl 0.666666666667\n");
  EXPECT_EQ(cli("metric " + scenario("two_point.yaml") + " --p dx --q dy").out, far.out);
  EXPECT_EQ(cli("metric " + scenario("two_point.yaml") + " --p dx --q nope").code, 1);
}

TEST(Cli, SolveWritesReports) {
  const fs::path out = scratch_dir() / "solve.json";
  const auto r = cli("solve " + scenario("dominant.yaml") + " --n 10 --out " + out.string());
  EXPECT_EQ(r.code, 0) << r.out;
  for (int i = 0; i < 10; ++i)
    EXPECT_NE(r.out.find("p" + std::to_string(i) + ":t0,0.1,1,0"), std::string::npos) << r.out;
  EXPECT_TRUE(fs::exists(out));
  EXPECT_TRUE(fs::exists(scratch_dir() / "solve.csv"));
  std::ifstream in(out);
  std::stringstream buf;
  buf << in.rdbuf();
  EXPECT_NE(buf.str().find("\"config\""), std::string::npos);
  EXPECT_NE(buf.str().find("certified_gap"), std::string::npos);

  const auto lim = cli("solve " + scenario("congestion.yaml") + " --limit");
  EXPECT_EQ(lim.code, 0) << lim.out;
}

TEST(Cli, StrictFlagsUnconvergedSolves) {
  std::string text = replace(kCongestion, "trials: 20", "trials: 20\n  max_iter: 1");
  text = replace(text, "-(isact(left)*mu(left) + isact(right)*mu(right))", "isact(left)");
  const fs::path path = write_file("one_step.yaml", text +
                                                        "players:\n  - {weight: 0.3, type: commuter}\n"
                                                        "  - {weight: 0.7, type: commuter}\n"
                                                        "profile:\n  - {left: 1}\n  - {left: 1}\n");
  EXPECT_EQ(cli("solve " + path.string() + " --players --strict").code, 2);
  EXPECT_EQ(cli("solve " + path.string() + " --players").code, 0);
  EXPECT_EQ(cli("solve " + scenario("congestion.yaml") + " --n 4 --strict").code, 0);
}

TEST(Cli, Experiments) {
  const auto conc = cli("concentrate " + scenario("dominant.yaml") + " --trials 10");
  EXPECT_EQ(conc.code, 0) << conc.out;
  EXPECT_NE(conc.out.find("bl_mean"), std::string::npos);
  const auto cg = cli("closedgraph " + scenario("congestion.yaml") + " --strict");
  EXPECT_EQ(cg.code, 0) << cg.out;
  const auto ned = cli("ned " + scenario("two_type.yaml") + " --strict");
  EXPECT_EQ(ned.code, 0) << ned.out;
  EXPECT_NE(ned.out.find("ned: pass"), std::string::npos) << ned.out;
}

TEST(Cli, DeterministicGivenSeed) {
  // every column except the wall time
  auto strip = [](const std::string& csv) {
    std::stringstream in(csv), out;
    std::string line;
    while (std::getline(in, line)) {
      std::stringstream cells(line);
      std::string cell;
      for (int col = 0; std::getline(cells, cell, ','); ++col)
        if (col != 12) out << cell << ',';
      out << '\n';
    }
    return out.str();
  };
  const auto a = cli("concentrate " + scenario("congestion.yaml") + " --trials 30 --seed 4");
  const auto b = cli("concentrate " + scenario("congestion.yaml") + " --trials 30 --seed 4");
  ASSERT_NE(a.out.find(",wall_time_s,"), std::string::npos);
  EXPECT_EQ(strip(a.out), strip(b.out));
  const auto c = cli("concentrate " + scenario("congestion.yaml") + " --trials 30 --seed 5");
  EXPECT_NE(strip(a.out), strip(c.out));
}
