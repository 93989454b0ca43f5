#include "commands.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <sstream>

#include "auxiva/pipeline.hpp"
#include "auxiva/wav.hpp"
#include "json.hpp"

namespace auxiva::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(path.string() + ": cannot open for writing");
  out << text;
  if (!out) throw std::runtime_error(path.string() + ": write failed");
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError(path.string() + ": cannot open");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void ensure_parent(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
}

WavData read_input(const std::string& path) {
  if (!fs::exists(path)) throw UsageError(path + ": no such file");
  return read_wav(path);
}

/// Stacks the channels of several WAV files.
WavData read_inputs(const std::vector<std::string>& paths) {
  if (paths.empty()) throw UsageError("separate: no input files");
  std::vector<WavData> parts;
  long rows = 0;
  for (const auto& p : paths) {
    parts.push_back(read_input(p));
    const auto& w = parts.back();
    if (w.samples.cols() == 0) throw UsageError(p + ": zero-length input");
    if (w.sample_rate != parts.front().sample_rate) throw UsageError(p + ": sample rate differs from the first input");
    if (w.samples.cols() != parts.front().samples.cols()) throw UsageError(p + ": length differs from the first input");
    rows += w.samples.rows();
  }
  WavData out;
  out.sample_rate = parts.front().sample_rate;
  out.samples.resize(rows, parts.front().samples.cols());
  long r = 0;
  for (const auto& w : parts) {
    out.samples.middleRows(r, w.samples.rows()) = w.samples;
    r += w.samples.rows();
  }
  return out;
}

SeparationOptions options_from(const KeyValueFile& kv, double sample_rate, int channels) {
  kv.check_keys({"method", "selector", "alpha", "n_iter", "update_period", "contrast", "threads", "r_floor",
                 "cov_init"});
  SeparationOptions o;
  o.stft.sample_rate = sample_rate;
  const std::string method = kv.get("method", "iss");
  if (method == "iss") {
    o.online.method = UpdateMethod::ISS;
  } else if (method == "ip") {
    o.online.method = UpdateMethod::IP;
  } else {
    kv.fail("method", "expected 'ip' or 'iss'");
  }
  const std::string contrast = kv.get("contrast", "laplace");
  if (contrast == "laplace") {
    o.contrast = ContrastKind::Laplace;
  } else if (contrast == "gauss") {
    o.contrast = ContrastKind::Gaussian;
  } else {
    kv.fail("contrast", "expected 'laplace' or 'gauss'");
  }
  o.online.alpha = kv.get_double("alpha", o.online.alpha);
  o.online.n_iter = static_cast<int>(kv.get_long("n_iter", o.online.n_iter));
  o.online.update_period = static_cast<int>(kv.get_long("update_period", o.online.update_period));
  o.online.cov_init = kv.get_double("cov_init", o.online.cov_init);
  o.r_floor = kv.get_double("r_floor", o.r_floor);
  o.threads = static_cast<int>(kv.get_long("threads", 1));
  try {
    o.online.selector = parse_selector(kv.get("selector", "all"), o.stft);
    o.online.validate(channels);
  } catch (const ContractViolation& e) {
    throw UsageError(e.what());
  }
  if (!(o.r_floor > 0)) kv.fail("r_floor", "must be positive");
  if (o.threads < 1) kv.fail("threads", "must be at least 1");
  return o;
}

json options_json(const SeparationOptions& o) {
  json j;
  j["method"] = to_string(o.online.method);
  j["contrast"] = to_string(o.contrast);
  j["alpha"] = o.online.alpha;
  j["n_iter"] = o.online.n_iter;
  j["update_period"] = o.online.update_period;
  j["cov_init"] = o.online.cov_init;
  j["r_floor"] = o.r_floor;
  if (o.online.selector.restricted()) {
    j["selector"] = {{"switch_frame", o.online.selector.switch_frame()}};
    std::vector<int> subset;
    for (int k : o.online.selector.subset()) subset.push_back(k + 1);
    j["selector"]["sources"] = subset;
  } else {
    j["selector"] = "all";
  }
  j["stft"] = {{"frame_len", o.stft.frame_len}, {"hop", o.stft.hop}, {"sample_rate", o.stft.sample_rate},
               {"window", "hamming"}};
  return j;
}

json runtime_json(const SeparationRun& run) {
  return {{"update_loop_s", run.update_seconds},
          {"projection_s", run.projection_seconds},
          {"stft_s", run.stft_seconds},
          {"total_s", run.total_seconds}};
}

json diagnostics_json(const std::vector<FrameDiagnostic>& diags) {
  json out = json::array();
  for (const auto& d : diags) {
    out.push_back({{"frame", d.t}, {"bin", d.f}, {"source", d.k + 1}, {"kind", d.kind}, {"message", d.message}});
  }
  return out;
}

json scenario_json(const ScenarioConfig& cfg) {
  json j;
  j["sources"] = cfg.sources;
  j["duration"] = cfg.duration;
  j["sample_rate"] = cfg.sample_rate;
  j["seed"] = cfg.seed;
  j["mixing"] = cfg.mixing == MixingKind::Instantaneous ? "instantaneous" : "convolutive";
  j["max_condition"] = cfg.max_condition;
  if (cfg.move) j["move"] = {{"source", cfg.move->source + 1}, {"time_s", cfg.move->time_s}};
  return j;
}

std::string slug(const std::string& label) {
  std::string s;
  for (char c : label) {
    if (std::isalnum(static_cast<unsigned char>(c))) s += static_cast<char>(std::tolower(c));
    else if (!s.empty() && s.back() != '_') s += '_';
  }
  while (!s.empty() && s.back() == '_') s.pop_back();
  return s;
}

/// Mean improvement over sources of segments lying entirely before / after
/// the switch sample.
std::pair<double, double> pre_post_means(const SdrImprovement& imp, long segment_len, long switch_sample) {
  const std::size_t segments = imp.segment_improvement.empty() ? 0 : imp.segment_improvement.front().size();
  const std::size_t pre_end = static_cast<std::size_t>(switch_sample / segment_len);
  const std::size_t post_begin = static_cast<std::size_t>((switch_sample + segment_len - 1) / segment_len);
  return {imp.mean_segment_improvement(0, std::min(pre_end, segments)),
          imp.mean_segment_improvement(std::min(post_begin, segments), segments)};
}

}  // namespace

int run_simulate(const SimulateArgs& args) {
  ScenarioConfig cfg = args.config.empty() ? default_scenario() : load_scenario(args.config);
  if (args.seed >= 0) cfg.seed = static_cast<std::uint64_t>(args.seed);
  MixingPlan plan;
  const GroundTruth gt = simulate(cfg, &plan);
  const Manifest m = write_scenario(args.out, cfg, gt, plan);
  std::cout << "wrote " << m.sources << " sources, " << gt.mixtures.rows() << " microphones, " << m.samples
            << " samples to " << args.out << "\n";
  return 0;
}

int run_separate(const SeparateArgs& args) {
  const WavData in = read_inputs(args.inputs);
  const int K = static_cast<int>(in.samples.rows());
  if (K > kMaxChannels) throw UsageError("separate: at most 8 channels are supported");
  const SeparationOptions opts = options_from(args.settings, in.sample_rate, K);
  if (in.samples.cols() < opts.stft.frame_len) throw UsageError("separate: input shorter than one STFT frame");

  const SeparationRun run = separate(in.samples, opts);
  ensure_parent(args.out);
  write_wav(args.out, run.separated, in.sample_rate);

  json report;
  report["inputs"] = args.inputs;
  report["output"] = args.out;
  report["channels"] = K;
  report["samples"] = in.samples.cols();
  report["frames"] = run.frames;
  report["config"] = options_json(opts);
  report["runtime"] = runtime_json(run);
  report["diagnostics"] = diagnostics_json(run.diagnostics);
  if (!args.report.empty()) {
    ensure_parent(args.report);
    write_text(args.report, report.dump(2) + "\n");
  }
  std::cout << "separated " << K << " channels, " << run.frames << " frames; update loop " << run.update_seconds
            << " s, total " << run.total_seconds << " s, " << run.diagnostics.size() << " frozen bins\n";
  return 0;
}

int run_evaluate(const EvaluateArgs& args) {
  const fs::path manifest_path(args.manifest);
  const Manifest m = parse_manifest(read_text(manifest_path));
  const fs::path dir = manifest_path.parent_path();
  const WavData mixture = read_input((dir / m.mixture_file).string());
  Signals refs(m.sources, mixture.samples.cols());
  for (int k = 0; k < m.sources; ++k) {
    const WavData img = read_input((dir / m.image_files[k]).string());
    if (img.samples.cols() != refs.cols()) throw UsageError(m.image_files[k] + ": length differs from the mixture");
    refs.row(k) = img.samples.row(0);
  }
  const WavData est = read_input(args.estimates);
  if (est.samples.rows() != m.sources) {
    throw UsageError(args.estimates + ": expected " + std::to_string(m.sources) + " channels, got " +
                     std::to_string(est.samples.rows()));
  }
  if (est.samples.cols() != refs.cols()) throw UsageError(args.estimates + ": length differs from the references");
  if (args.segment_len <= 0) throw UsageError("evaluate: segment length must be positive");

  const Evaluation ev = evaluate(args.method, refs, mixture.samples.row(0).transpose(), est.samples,
                                 args.segment_len, m.sample_rate);
  const std::string csv = format_csv(ev.rows);
  if (args.csv.empty()) {
    std::cout << csv;
  } else {
    ensure_parent(args.csv);
    write_text(args.csv, csv);
  }
  if (!args.json.empty()) {
    json j;
    j["method"] = args.method;
    j["segment_len"] = args.segment_len;
    std::vector<int> perm;
    for (int p : ev.improvement.permutation) perm.push_back(p + 1);
    j["permutation"] = perm;
    j["overall_improvement_db"] = ev.improvement.mean_overall_improvement();
    j["source_improvement_db"] = ev.improvement.overall_improvement;
    j["source_sdr_db"] = ev.improvement.overall_sdr;
    ensure_parent(args.json);
    write_text(args.json, j.dump(2) + "\n");
  }
  return 0;
}

int run_demo(const DemoArgs& args) {
  ScenarioConfig cfg = args.scenario.empty() ? default_scenario() : load_scenario(args.scenario);
  if (args.seed >= 0) cfg.seed = static_cast<std::uint64_t>(args.seed);
  if (args.segment_len <= 0) throw UsageError("demo: segment length must be positive");
  if (args.threads < 1) throw UsageError("demo: threads must be at least 1");
  const fs::path out(args.out);
  MixingPlan plan;
  const GroundTruth gt = simulate(cfg, &plan);
  const Manifest manifest = write_scenario((out / "scenario").string(), cfg, gt, plan);
  const Signals refs = gt.reference_images();
  const Eigen::VectorXd mic1 = gt.mixtures.row(0).transpose();

  SeparationOptions base;
  base.stft.sample_rate = cfg.sample_rate;
  base.threads = args.threads;
  const int switch_frame = plan.has_move() ? frame_at_time(cfg.move->time_s, base.stft) : 0;

  std::vector<EvaluationRow> rows;
  json methods = json::array();
  json runtime = json::object();
  std::map<std::string, double> overall, update_time;
  // Outputs of the "all" run for each update rule; the "one" run keeps
  // updating whichever output that run assigned to the moving source.
  std::map<UpdateMethod, int> moving_output;
  for (const auto& spec : standard_methods()) {
    if (spec.one && !plan.has_move()) continue;
    const int moving = spec.one ? moving_output.at(spec.method) : 0;
    const SeparationOptions opts = options_for(spec, switch_frame, moving, base);
    const SeparationRun run = separate(gt.mixtures, opts);
    if (!spec.one && plan.has_move()) {
      moving_output[spec.method] = output_for_source(refs, run.separated, plan.switch_sample, plan.move_source);
    }
    write_wav((out / ("separated_" + slug(spec.label) + ".wav")).string(), run.separated, cfg.sample_rate);
    const Evaluation ev = evaluate(spec.label, refs, mic1, run.separated, args.segment_len, cfg.sample_rate);
    rows.insert(rows.end(), ev.rows.begin(), ev.rows.end());

    json mj;
    mj["method"] = spec.label;
    mj["config"] = options_json(opts);
    if (spec.one) mj["updated_output"] = moving + 1;
    mj["overall_improvement_db"] = ev.improvement.mean_overall_improvement();
    mj["source_improvement_db"] = ev.improvement.overall_improvement;
    if (plan.has_move()) {
      const auto [pre, post] = pre_post_means(ev.improvement, args.segment_len, plan.switch_sample);
      mj["pre_move_segment_mean_db"] = pre;
      mj["post_move_segment_mean_db"] = post;
    }
    mj["frozen_bins"] = run.diagnostics.size();
    methods.push_back(mj);
    runtime[spec.label] = runtime_json(run);
    overall[spec.label] = ev.improvement.mean_overall_improvement();
    update_time[spec.label] = run.update_seconds;
    std::cout << spec.label << ": improvement " << overall[spec.label] << " dB, update loop " << run.update_seconds
              << " s\n";
  }
  write_text(out / "results.csv", format_csv(rows));

  json summary;
  summary["scenario"] = scenario_json(cfg);
  summary["manifest"] = "scenario/manifest.json";
  summary["segment_len"] = args.segment_len;
  summary["methods"] = methods;
  if (plan.has_move()) {
    summary["orderings"] = {{"iss_one_above_ip_one", overall["ISS(one)"] > overall["IP(one)"]},
                            {"iss_one_vs_iss_all_db", overall["ISS(one)"] - overall["ISS(all)"]}};
    runtime["orderings"] = {{"iss_one_faster_than_iss_all", update_time["ISS(one)"] < update_time["ISS(all)"]},
                            {"ip_one_faster_than_ip_all", update_time["IP(one)"] < update_time["IP(all)"]}};
  }
  summary["runtime"] = runtime;
  write_text(out / "summary.json", summary.dump(2) + "\n");
  (void)manifest;
  return 0;
}

int run_bench(const BenchArgs& args) {
  if (args.frames < 1 || args.bins < 1 || args.threads < 1) throw UsageError("bench: counts must be positive");
  json results = json::array();
  std::printf("%-6s %-4s %14s %14s %10s %12s\n", "method", "K", "us/frame", "cmacs/frame", "solves", "inversions");
  for (const int K : args.channels) {
    if (K < 1 || K > kMaxChannels) throw UsageError("bench: channel counts must lie in [1, 8]");
    std::mt19937_64 rng(1234);
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<Frame<double>> frames(static_cast<std::size_t>(args.frames), Frame<double>(K, args.bins));
    for (auto& fr : frames)
      for (int f = 0; f < args.bins; ++f)
        for (int k = 0; k < K; ++k) fr(k, f) = {g(rng), g(rng)};
    for (const auto method : {UpdateMethod::ISS, UpdateMethod::IP}) {
      OnlineConfig<double> cfg;
      cfg.method = method;
      OnlineAuxIva<double> eng(K, args.bins, cfg, ContrastModel<double>{ContrastKind::Laplace, args.bins},
                               args.threads);
      Frame<double> y(K, args.bins);
      for (int t = 0; t < std::min(5, args.frames); ++t) eng.process_frame(frames[t], y);
      kernel_counters.reset();
      const auto start = std::chrono::steady_clock::now();
      for (const auto& fr : frames) eng.process_frame(fr, y);
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      const KernelCounters c = kernel_counters;
      const double us = 1e6 * secs / args.frames;
      // Counters are per thread; with worker threads only the caller's share is seen.
      const double cmacs = static_cast<double>(c.cmacs) / args.frames;
      std::printf("%-6s %-4d %14.1f %14.0f %10llu %12llu\n", to_string(method), K, us, cmacs,
                  static_cast<unsigned long long>(c.solves), static_cast<unsigned long long>(c.inversions));
      results.push_back({{"method", to_string(method)},
                         {"channels", K},
                         {"bins", args.bins},
                         {"frames", args.frames},
                         {"threads", args.threads},
                         {"us_per_frame", us},
                         {"cmacs_per_frame", cmacs},
                         {"solves", c.solves},
                         {"inversions", c.inversions}});
    }
  }
  if (!args.json.empty()) {
    ensure_parent(args.json);
    write_text(args.json, results.dump(2) + "\n");
  }
  return 0;
}

}  // namespace auxiva::cli
