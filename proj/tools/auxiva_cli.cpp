// auxiva: simulate | separate | evaluate | demo | bench
//
// Exit codes: 0 success, 2 usage error, 1 runtime error.

#include <iostream>

#include "CLI11.hpp"
#include "auxiva/errors.hpp"
#include "auxiva/keyvalue.hpp"
#include "commands.hpp"

namespace {

using namespace auxiva::cli;

struct SeparateFlags {
  std::string config;
  std::string method, selector, alpha, n_iter, update_period, contrast, threads;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Online AuxIVA blind source separation (IP and ISS updates)"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Generate a mixing scenario with ground truth");
  simulate->add_option("config", sim.config, "Scenario config file (default scenario when omitted)");
  simulate->add_option("-o,--out", sim.out, "Output directory")->required();
  simulate->add_option("--seed", sim.seed, "Override the scenario seed")->check(CLI::NonNegativeNumber);

  SeparateArgs sep;
  SeparateFlags sf;
  auto* separate = app.add_subcommand("separate", "Run the online separator on multichannel WAV input");
  separate->add_option("inputs", sep.inputs, "Input WAV files; channels are stacked in order")->required();
  separate->add_option("-o,--out", sep.out, "Separated WAV (one channel per source)")->required();
  separate->add_option("--report", sep.report, "JSON report with timings and diagnostics");
  separate->add_option("--config", sf.config, "Key-value settings file; flags override it");
  auto* o_method = separate->add_option("--method", sf.method, "ip | iss (default iss)");
  auto* o_selector = separate->add_option("--selector", sf.selector, "all | one:<k>:<frame> | one:<k>:<seconds>s");
  auto* o_alpha = separate->add_option("--alpha", sf.alpha, "Forgetting factor in [0, 1) (default 0.99)");
  auto* o_iter = separate->add_option("--n-iter", sf.n_iter, "Inner iterations per frame (default 2)");
  auto* o_period = separate->add_option("--update-period", sf.update_period, "Update every Q frames (default 1)");
  auto* o_contrast = separate->add_option("--contrast", sf.contrast, "laplace | gauss (default laplace)");
  auto* o_threads = separate->add_option("--threads", sf.threads, "Worker threads over frequency bins");

  EvaluateArgs ev;
  auto* evaluate = app.add_subcommand("evaluate", "Score separated signals against a scenario's ground truth");
  evaluate->add_option("--manifest", ev.manifest, "manifest.json written by simulate")->required();
  evaluate->add_option("--estimates", ev.estimates, "Separated WAV")->required();
  evaluate->add_option("--method", ev.method, "Label for the method column");
  evaluate->add_option("--csv", ev.csv, "CSV output (stdout when omitted)");
  evaluate->add_option("--json", ev.json, "JSON summary output");
  evaluate->add_option("--segment-len", ev.segment_len, "Segment length in samples (default 32000)");

  DemoArgs demo;
  auto* demo_cmd = app.add_subcommand("demo", "Moving-source experiment: four methods, CSV and JSON summary");
  demo_cmd->add_option("-o,--out", demo.out, "Output directory")->required();
  demo_cmd->add_option("--scenario", demo.scenario, "Scenario config (default: 3 sources, 60 s, move at 30 s)");
  demo_cmd->add_option("--seed", demo.seed, "Override the scenario seed")->check(CLI::NonNegativeNumber);
  demo_cmd->add_option("--segment-len", demo.segment_len, "Segment length in samples (default 32000)");
  demo_cmd->add_option("--threads", demo.threads, "Worker threads over frequency bins");

  BenchArgs bench;
  auto* bench_cmd = app.add_subcommand("bench", "Per-frame cost of the ISS and IP update loops");
  bench_cmd->add_option("--channels", bench.channels, "Channel counts")->delimiter(',');
  bench_cmd->add_option("--frames", bench.frames, "Timed frames per configuration");
  bench_cmd->add_option("--bins", bench.bins, "Frequency bins");
  bench_cmd->add_option("--threads", bench.threads, "Worker threads over frequency bins");
  bench_cmd->add_option("--json", bench.json, "JSON output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*simulate) return run_simulate(sim);
    if (*separate) {
      sep.settings = sf.config.empty() ? auxiva::KeyValueFile{} : auxiva::KeyValueFile::load(sf.config);
      const std::pair<CLI::Option*, const char*> flags[] = {
          {o_method, "method"},       {o_selector, "selector"},          {o_alpha, "alpha"},
          {o_iter, "n_iter"},         {o_period, "update_period"},       {o_contrast, "contrast"},
          {o_threads, "threads"}};
      for (const auto& [opt, key] : flags) {
        if (opt->count() > 0) sep.settings.set(key, opt->as<std::string>());
      }
      return run_separate(sep);
    }
    if (*evaluate) return run_evaluate(ev);
    if (*demo_cmd) return run_demo(demo);
    if (*bench_cmd) return run_bench(bench);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const auxiva::ContractViolation& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
