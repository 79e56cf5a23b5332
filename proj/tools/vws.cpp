// Command-line driver: `vws run <spec>` and `vws verify [suite]`.

#include <iostream>

#include "CLI11.hpp"

#include "vws/config.hpp"
#include "vws/run.hpp"
#include "vws/verify.hpp"

namespace {

constexpr int kUsageError = 64;

int run_command(const std::string& path, bool check, const vws::RunOptions& opt) {
  const vws::RunSpec spec = vws::load_spec(path);
  if (check) {
    std::cout << path << ": ok (spec hash " << vws::fnv1a_hex(vws::canonical_spec(spec)) << ")\n";
    return 0;
  }
  const vws::RunOutcome out = vws::run(spec, opt);
  std::cout << "wrote " << out.out_dir.string() << "\n";
  if (out.summary.contains("verdicts"))
    for (const auto& [name, verdict] : out.summary["verdicts"].items()) {
      if (verdict.contains("pass")) {
        std::cout << (verdict["pass"].get<bool>() ? "PASS " : "FAIL ") << name << "\n";
        continue;
      }
      for (const auto& [key, sub] : verdict.items())
        std::cout << (sub["pass"].get<bool>() ? "PASS " : "FAIL ") << name << " " << key << "\n";
    }
  return out.status;
}

int verify_command(const std::string& suite, const vws::VerifyOptions& opt) {
  const auto results = vws::run_verify(suite, opt);
  std::size_t failed = 0;
  for (const auto& r : results) {
    failed += !r.passed;
    std::cout << (r.passed ? "PASS " : "FAIL ") << r.suite << " " << r.property << "  " << r.detail << "\n";
  }
  std::cout << results.size() - failed << "/" << results.size() << " properties passed\n";
  return failed ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Very weak solution experiments: truncation sweeps, weighted estimates, property suites"};
  app.require_subcommand(1);
  std::uint64_t seed = 1;
  unsigned threads = 1;
  auto* seed_opt = app.add_option("--seed", seed, "random seed (overrides run.seed)");
  auto* threads_opt = app.add_option("--threads", threads, "worker threads")->check(CLI::Range(1u, 256u));

  auto* run = app.add_subcommand("run", "execute a run specification");
  std::string spec_path, out_dir;
  bool check = false;
  run->add_option("spec", spec_path, "spec file")->required();
  run->add_flag("--check", check, "validate the spec without computing");
  auto* out_opt = run->add_option("--out", out_dir, "output directory (overrides output.dir)");
  run->fallthrough();

  auto* verify = app.add_subcommand("verify", "run the property suites");
  std::string suite, set;
  bool fault = false;
  std::size_t points = 20000;
  verify->add_option("suite", suite, "one of: whitney, pou, truncation, maximal, flux, solver, estimates");
  auto* set_opt = verify->add_option("--set", set, "restrict set-based suites to one named set");
  verify->add_flag("--inject-fault", fault, "substitute a non-monotone flux in the flux suite");
  verify->add_option("--points", points, "random points per sampled property")->check(CLI::PositiveNumber);
  verify->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kUsageError;
  }

  try {
    if (*run) {
      vws::RunOptions opt;
      opt.log = &std::cerr;
      if (*out_opt) opt.out = out_dir;
      if (*seed_opt) opt.seed = seed;
      if (*threads_opt) opt.threads = threads;
      return run_command(spec_path, check, opt);
    }
    vws::VerifyOptions opt;
    opt.seed = seed;
    opt.inject_fault = fault;
    opt.points = points;
    if (*set_opt) opt.set = set;
    return verify_command(suite, opt);
  } catch (const vws::InvalidArgument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsageError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
