#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <set>
#include <sstream>

#include "oracles.hpp"

using namespace vws;
namespace fs = std::filesystem;

namespace {

const char* kSmall = R"(# small 2D sweep
[grid]
dim = 2
n = 16

[flux]
model = p_laplacian
p = 3          ; exponent

[rhs]
kind = singular
beta = 0.7

[estimates]
q = 2.5, 3
levels = 2, 4, 8
deltas = 1e-2, 1e-3
reports = apri1, apri2, apri3, apriori
)";

RunSpec parse(const std::string& text) {
  std::istringstream is(text);
  return parse_spec(is, "t.ini");
}

std::string error_of(const std::string& text) {
  try {
    parse(text);
  } catch (const SpecError& e) {
    return e.what();
  }
  return "";
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("vws_test_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), {}};
}

struct Shell {
  int status;
  std::string output;
};

Shell cli(const std::string& args) {
  const std::string cmd = std::string(VWS_CLI_PATH) + " " + args + " 2>&1";
  FILE* pipe = ::popen(cmd.c_str(), "r");
  if (!pipe) throw std::runtime_error("popen failed");
  std::string out;
  char buf[4096];
  while (std::size_t got = std::fread(buf, 1, sizeof buf, pipe)) out.append(buf, got);
  const int raw = ::pclose(pipe);
  return {WIFEXITED(raw) ? WEXITSTATUS(raw) : -1, out};
}

}  // namespace

TEST(Spec, ParsesAllSections) {
  const RunSpec s = parse(kSmall);
  EXPECT_EQ(s.dim, 2);
  EXPECT_EQ(s.n, 16);
  EXPECT_EQ(s.p(), 3.0);
  EXPECT_EQ(s.q, (std::vector<double>{2.5, 3.0}));
  EXPECT_EQ(s.levels.size(), 3u);
  EXPECT_EQ(s.reports.size(), 4u);
  EXPECT_EQ(s.lines.at("flux.p"), 8);
}

TEST(Spec, DiagnosticsNameLineAndField) {
  EXPECT_EQ(error_of("[grid]\nn = 12\n[flux]\np = 2\n"), "t.ini:2: field 'grid.n': must be a power of two >= 2");
  EXPECT_EQ(error_of("[grid]\nn = abc\n[flux]\np = 2\n"), "t.ini:2: field 'grid.n': expected an integer, got 'abc'");
  EXPECT_EQ(error_of("[flux]\np = 2\n[estimates]\nq = 2.5\n"), "t.ini:4: field 'estimates.q': every q must satisfy 1 < q <= p");
  EXPECT_EQ(error_of("[flux]\np = 2\nwhat = 1\n"), "t.ini:3: field 'flux.what': unknown parameter for flux p_laplacian");
  EXPECT_EQ(error_of("[flux]\np = 2\n[grid]\nsize = 4\n"), "t.ini:4: field 'grid.size': unknown field");
  EXPECT_EQ(error_of("[flux]\np = 2\np = 3\n"), "t.ini:3: field 'flux.p' set twice (first on line 2)");
  EXPECT_EQ(error_of("[mesh]\n"), "t.ini:1: unknown section [mesh]");
  EXPECT_EQ(error_of("n = 4\n"), "t.ini:1: key outside of any section");
  EXPECT_EQ(error_of("[grid]\n"), "t.ini:0: field 'flux.p': missing (required)");
  EXPECT_EQ(error_of("[flux]\np = 2\n[estimates]\nlevels = 4, 2\n"), "t.ini:4: field 'estimates.levels': levels must increase");
  EXPECT_EQ(error_of("[flux]\np = 2\n[estimates]\nreports = apriori\n"),
            "t.ini:0: field 'estimates.deltas': apriori reports need at least one delta");
  EXPECT_NE(error_of("[flux]\np = 2\n[solver]\ncontinuation = 2\n").find("continuation"), std::string::npos);
}

TEST(Spec, CanonicalHashIgnoresLayout) {
  const RunSpec a = parse(kSmall);
  const RunSpec b = parse("[estimates]\nreports=apri1,apri2,apri3,apriori\ndeltas=0.01,0.001\nlevels=2,4,8\nq=2.5,3.0\n"
                          "[rhs]\nbeta=0.7\n[flux]\np=3\n[grid]\nn=16\n");
  EXPECT_EQ(fnv1a_hex(canonical_spec(a)), fnv1a_hex(canonical_spec(b)));
  const RunSpec c = parse(std::string(kSmall) + "[run]\nseed = 9\n");
  EXPECT_NE(fnv1a_hex(canonical_spec(a)), fnv1a_hex(canonical_spec(c)));
  EXPECT_EQ(fnv1a_hex(""), "cbf29ce484222325");
}

TEST(Spec, PresetsParse) {
  for (const auto& e : fs::directory_iterator(VWS_PRESET_DIR))
    if (e.path().extension() == ".ini") EXPECT_NO_THROW(load_spec(e.path().string())) << e.path();
  EXPECT_THROW(load_spec("/nonexistent/spec.ini"), InvalidArgument);
}

TEST(Run, WritesArtifactsAndSchemaCoversEveryColumn) {
  const fs::path dir = scratch("artifacts");
  RunOptions opt;
  opt.out = dir.string();
  const RunOutcome out = run(parse(kSmall), opt);
  EXPECT_EQ(out.status, 0);
  for (const char* name : {"reports.csv", "sequence.csv", "chain.csv", "levelsets.csv", "schema.csv", "summary.json",
                           "history_k2.csv", "u_k8.vwsf", "f_k8.vwsf", "constant_vs_k.csv", "constant_vs_q.csv"})
    EXPECT_TRUE(fs::exists(dir / name)) << name;

  std::map<std::string, std::set<std::string>> documented;
  std::istringstream schema(slurp(dir / "schema.csv"));
  std::string line;
  std::getline(schema, line);
  while (std::getline(schema, line)) {
    const auto a = line.find(','), b = line.find(',', a + 1);
    documented[line.substr(0, a)].insert(line.substr(a + 1, b - a - 1));
  }
  for (const char* name : {"reports.csv", "sequence.csv", "chain.csv", "levelsets.csv", "history_k2.csv",
                           "constant_vs_k.csv", "constant_vs_q.csv"}) {
    std::istringstream is(slurp(dir / name));
    std::getline(is, line);
    const std::string key = std::string(name).rfind("history", 0) == 0 ? "history_k*.csv" : name;
    std::istringstream cols(line);
    std::string col;
    while (std::getline(cols, col, ',')) EXPECT_TRUE(documented[key].count(col)) << name << ": " << col;
  }

  const auto sum = nlohmann::json::parse(slurp(dir / "summary.json"));
  EXPECT_EQ(sum["status"], "ok");
  EXPECT_EQ(sum["spec_hash"], fnv1a_hex(canonical_spec(parse(kSmall))));
  const SobolevFunction u = [&] {
    std::ifstream is(dir / "u_k8.vwsf", std::ios::binary);
    return io::read_sobolev(is);
  }();
  EXPECT_EQ(u.grid(), Grid(2, 16));
  EXPECT_TRUE(u.trace_is_zero());
  fs::remove_all(dir);
}

TEST(Run, ZeroDataGivesZeroLeftSides) {
  const fs::path dir = scratch("zero");
  RunOptions opt;
  opt.out = dir.string();
  const RunOutcome out = run(load_spec(std::string(VWS_PRESET_DIR) + "/zero_rhs.ini"), opt);
  EXPECT_EQ(out.status, 0);
  for (const auto& r : out.summary["reports"]) EXPECT_EQ(r["lhs"], 0.0) << r.dump();
  fs::remove_all(dir);
}

TEST(Run, SameSeedGivesIdenticalFiles) {
  const fs::path a = scratch("det_a"), b = scratch("det_b");
  RunOptions oa, ob;
  oa.out = a.string();
  ob.out = b.string();
  ob.threads = 4;
  run(parse(kSmall), oa);
  run(parse(kSmall), ob);
  std::size_t compared = 0;
  for (const auto& e : fs::directory_iterator(a)) {
    const auto ext = e.path().extension();
    if (ext != ".csv" && ext != ".vwsf") continue;
    EXPECT_EQ(slurp(e.path()), slurp(b / e.path().filename())) << e.path().filename();
    ++compared;
  }
  EXPECT_GT(compared, 10u);
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(Run, SolverFailureKeepsPartialArtifacts) {
  const fs::path dir = scratch("fail");
  RunOptions opt;
  opt.out = dir.string();
  const RunSpec s = parse(std::string(kSmall) + "[solver]\nmax_iters = 1\nmu_floor = 1e-8\ntol_grad = 1e-16\n");
  const RunOutcome out = run(s, opt);
  EXPECT_EQ(out.status, 2);
  EXPECT_EQ(out.summary["status"], "solver_failure");
  EXPECT_TRUE(fs::exists(dir / "history_failed.csv"));
  EXPECT_TRUE(fs::exists(dir / "u_failed.vwsf"));
  fs::remove_all(dir);
}

TEST(Cli, CheckValidatesWithoutRunning) {
  const Shell ok = cli("run " + std::string(VWS_PRESET_DIR) + "/theorem2_sweep.ini --check");
  EXPECT_EQ(ok.status, 0) << ok.output;
  EXPECT_NE(ok.output.find("spec hash"), std::string::npos);

  const fs::path dir = scratch("cli_bad");
  { std::ofstream(dir / "bad.ini") << "[grid]\nn = 3\n[flux]\np = 2\n"; }
  const Shell bad = cli("run " + (dir / "bad.ini").string() + " --check");
  EXPECT_EQ(bad.status, 64);
  EXPECT_NE(bad.output.find("bad.ini:2: field 'grid.n'"), std::string::npos) << bad.output;
  fs::remove_all(dir);
}

TEST(Cli, UsageErrorsExit64) {
  EXPECT_EQ(cli("").status, 64);
  EXPECT_EQ(cli("frobnicate").status, 64);
  EXPECT_EQ(cli("verify nosuchsuite").status, 64);
  EXPECT_EQ(cli("--help").status, 0);
}

TEST(Cli, RunPrintsVerdictsAndHonoursOut) {
  const fs::path dir = scratch("cli_run");
  const Shell r = cli("--seed 3 run " + std::string(VWS_PRESET_DIR) + "/quick_1d.ini --out " + dir.string());
  EXPECT_EQ(r.status, 0) << r.output;
  EXPECT_NE(r.output.find("PASS chain"), std::string::npos) << r.output;
  EXPECT_EQ(nlohmann::json::parse(slurp(dir / "summary.json"))["seed"], 3);
  fs::remove_all(dir);
}

TEST(Cli, VerifySetRestrictsProperties) {
  const Shell r = cli("verify whitney --set square --points 2000");
  EXPECT_EQ(r.status, 0) << r.output;
  std::istringstream is(r.output);
  std::string line;
  std::size_t props = 0;
  while (std::getline(is, line)) {
    if (line.rfind("PASS ", 0) != 0 && line.rfind("FAIL ", 0) != 0) continue;
    ++props;
    EXPECT_NE(line.find("square"), std::string::npos) << line;
  }
  EXPECT_GT(props, 0u);
}

TEST(Cli, InjectedFaultFailsMonotonicity) {
  const Shell clean = cli("verify flux --points 2000");
  EXPECT_EQ(clean.status, 0) << clean.output;
  const Shell r = cli("verify flux --inject-fault --points 2000");
  EXPECT_EQ(r.status, 1);
  EXPECT_NE(r.output.find("FAIL flux negated"), std::string::npos) << r.output;
  EXPECT_NE(r.output.find("(A3)"), std::string::npos);
}
