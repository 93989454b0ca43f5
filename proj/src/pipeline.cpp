#include "auxiva/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <sstream>

#include "auxiva/errors.hpp"
#include "auxiva/wav.hpp"
#include "json.hpp"

namespace auxiva {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& j) {
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = rows == 0 ? 0 : static_cast<Eigen::Index>(j.at(0).size());
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    require(static_cast<Eigen::Index>(j.at(i).size()) == cols, "manifest: ragged matrix");
    for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = j.at(i).at(c).get<double>();
  }
  return m;
}

nlohmann::json bank_to_json(const FilterBank& bank) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& row : bank) {
    nlohmann::json r = nlohmann::json::array();
    for (const auto& h : row) r.push_back(h);
    out.push_back(r);
  }
  return out;
}

FilterBank bank_from_json(const nlohmann::json& j) {
  FilterBank bank;
  for (const auto& row : j) {
    std::vector<Filter> r;
    for (const auto& h : row) r.push_back(h.get<Filter>());
    bank.push_back(std::move(r));
  }
  return bank;
}

}  // namespace

int frame_at_time(double seconds, const StftConfig& stft) {
  require(seconds >= 0.0, "frame_at_time: negative time");
  return static_cast<int>(std::lround(seconds * stft.sample_rate / stft.hop));
}

SourceSelector parse_selector(const std::string& text, const StftConfig& stft) {
  if (text == "all") return SourceSelector::all();
  int k = 0;
  char rest[64] = {0};
  if (std::sscanf(text.c_str(), "one:%d:%63s", &k, rest) != 2 || k < 1) {
    throw ContractViolation("selector: expected 'all' or 'one:<source>:<frame|seconds>s'");
  }
  std::string when(rest);
  int frame = 0;
  try {
    std::size_t used = 0;
    if (!when.empty() && when.back() == 's') {
      const double sec = std::stod(when.substr(0, when.size() - 1), &used);
      if (used != when.size() - 1) throw std::invalid_argument("trailing");
      frame = frame_at_time(sec, stft);
    } else {
      frame = std::stoi(when, &used);
      if (used != when.size()) throw std::invalid_argument("trailing");
    }
  } catch (const std::logic_error&) {
    throw ContractViolation("selector: bad switch point '" + when + "'");
  }
  if (frame < 0) throw ContractViolation("selector: switch frame must be nonnegative");
  const int idx = k - 1;
  return SourceSelector::subset_after(frame, std::span<const int>(&idx, 1));
}

SeparationRun separate(const Signals& mixtures, const SeparationOptions& opts) {
  require(mixtures.rows() >= 1 && mixtures.rows() <= kMaxChannels, "separate: channel count outside [1, 8]");
  require(mixtures.cols() >= opts.stft.frame_len, "separate: input shorter than one STFT frame");
  const auto total_start = Clock::now();
  SeparationRun run;

  auto t0 = Clock::now();
  const Spectrogram X = analyze(mixtures, opts.stft);
  run.stft_seconds += seconds_since(t0);

  const int K = X.channels();
  const int F = X.bins();
  ContrastModel<double> model{opts.contrast, F, opts.r_floor};
  OnlineAuxIva<double> engine(K, F, opts.online, model, opts.threads);

  Spectrogram Y(K, X.frames(), F);
  Frame<double> x(K, F), y(K, F);
  for (int t = 0; t < X.frames(); ++t) {
    X.get_frame(t, x);
    t0 = Clock::now();
    engine.process_frame(x, y);
    run.update_seconds += seconds_since(t0);
    t0 = Clock::now();
    Y.set_frame(t, project_back<double>(engine.demixing(), y));
    run.projection_seconds += seconds_since(t0);
  }
  run.frames = X.frames();

  t0 = Clock::now();
  run.separated = synthesize(Y, opts.stft, mixtures.cols());
  run.stft_seconds += seconds_since(t0);
  run.diagnostics = engine.diagnostics();
  run.total_seconds = seconds_since(total_start);
  return run;
}

std::vector<MethodSpec> standard_methods() {
  return {{"ISS(all)", UpdateMethod::ISS, false},
          {"ISS(one)", UpdateMethod::ISS, true},
          {"IP(all)", UpdateMethod::IP, false},
          {"IP(one)", UpdateMethod::IP, true}};
}

SeparationOptions options_for(const MethodSpec& spec, int switch_frame, int moving,
                              const SeparationOptions& base) {
  SeparationOptions opts = base;
  opts.online.method = spec.method;
  opts.online.selector =
      spec.one ? SourceSelector::subset_after(switch_frame, std::span<const int>(&moving, 1)) : SourceSelector::all();
  return opts;
}

int output_for_source(const Signals& reference_images, const Signals& separated, long samples, int source) {
  require(source >= 0 && source < reference_images.rows(), "output_for_source: source index out of range");
  require(samples > 0 && samples <= reference_images.cols() && samples <= separated.cols(),
          "output_for_source: sample range out of bounds");
  const std::vector<int> perm =
      resolve_permutation(reference_images.leftCols(samples), separated.leftCols(samples));
  return perm[source];
}

Evaluation evaluate(const std::string& method, const Signals& reference_images,
                    const Eigen::Ref<const Eigen::VectorXd>& mic1, const Signals& estimates, long segment_len,
                    double sample_rate) {
  require(sample_rate > 0.0, "evaluate: sample rate must be positive");
  Evaluation ev;
  ev.method = method;
  ev.improvement = sdr_improvement(reference_images, mic1, estimates, segment_len);
  for (std::size_t k = 0; k < ev.improvement.segment_sdr.size(); ++k) {
    for (std::size_t i = 0; i < ev.improvement.segment_sdr[k].size(); ++i) {
      ev.rows.push_back(EvaluationRow{method, static_cast<int>(i),
                                      static_cast<double>(i) * segment_len / sample_rate, static_cast<int>(k) + 1,
                                      ev.improvement.segment_sdr[k][i], ev.improvement.segment_improvement[k][i]});
    }
  }
  return ev;
}

std::string format_csv(const std::vector<EvaluationRow>& rows, bool header) {
  std::string out;
  if (header) out += "method,segment_index,time_s,source,sdr_db,sdr_improvement_db\n";
  char buf[256];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%s,%d,%.3f,%d,%.6f,%.6f\n", r.method.c_str(), r.segment_index, r.time_s,
                  r.source, r.sdr_db, r.sdr_improvement_db);
    out += buf;
  }
  return out;
}

std::string manifest_json(const Manifest& m) {
  nlohmann::json j;
  j["sources"] = m.sources;
  j["sample_rate"] = m.sample_rate;
  j["samples"] = m.samples;
  j["duration"] = m.duration;
  j["seed"] = m.seed;
  j["mixing"] = m.plan.kind == MixingKind::Instantaneous ? "instantaneous" : "convolutive";
  j["matrix"] = matrix_to_json(m.plan.matrix_before);
  if (m.plan.kind == MixingKind::Convolutive) j["filters"] = bank_to_json(m.plan.before);
  if (m.has_move) {
    nlohmann::json mv;
    mv["source"] = m.move_source + 1;
    mv["time_s"] = m.move_time;
    mv["switch_sample"] = m.plan.switch_sample;
    mv["matrix_after"] = matrix_to_json(m.plan.matrix_after);
    if (m.plan.kind == MixingKind::Convolutive) {
      nlohmann::json after = nlohmann::json::array();
      for (const auto& row : m.plan.after) after.push_back(row[m.move_source]);
      mv["filters_after"] = after;
    }
    j["move"] = mv;
  }
  j["files"]["mixture"] = m.mixture_file;
  j["files"]["sources"] = m.source_files;
  j["files"]["images"] = m.image_files;
  return j.dump(2) + "\n";
}

Manifest parse_manifest(const std::string& json_text) {
  Manifest m;
  try {
    const auto j = nlohmann::json::parse(json_text);
    m.sources = j.at("sources").get<int>();
    m.sample_rate = j.at("sample_rate").get<double>();
    m.samples = j.at("samples").get<long>();
    m.duration = j.value("duration", m.samples / m.sample_rate);
    m.seed = j.value("seed", std::uint64_t{0});
    const std::string kind = j.value("mixing", std::string("instantaneous"));
    m.plan.kind = kind == "convolutive" ? MixingKind::Convolutive : MixingKind::Instantaneous;
    m.plan.sources = m.sources;
    m.plan.matrix_before = matrix_from_json(j.at("matrix"));
    m.plan.matrix_after = m.plan.matrix_before;
    if (j.contains("filters")) m.plan.before = bank_from_json(j.at("filters"));
    m.plan.after = m.plan.before;
    if (j.contains("move")) {
      const auto& mv = j.at("move");
      m.has_move = true;
      m.move_source = mv.at("source").get<int>() - 1;
      m.move_time = mv.at("time_s").get<double>();
      m.plan.move_source = m.move_source;
      m.plan.switch_sample = mv.value("switch_sample", static_cast<long>(std::floor(m.move_time * m.sample_rate)));
      if (mv.contains("matrix_after")) m.plan.matrix_after = matrix_from_json(mv.at("matrix_after"));
    }
    const auto& files = j.at("files");
    m.mixture_file = files.at("mixture").get<std::string>();
    m.source_files = files.value("sources", std::vector<std::string>{});
    m.image_files = files.at("images").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw ContractViolation(std::string("manifest: ") + e.what());
  }
  require(m.sources >= 1 && static_cast<int>(m.image_files.size()) == m.sources,
          "manifest: need one image file per source");
  return m;
}

Manifest write_scenario(const std::string& dir, const ScenarioConfig& cfg, const GroundTruth& gt,
                        const MixingPlan& plan) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  Manifest m;
  m.sources = cfg.sources;
  m.sample_rate = cfg.sample_rate;
  m.samples = gt.mixtures.cols();
  m.duration = cfg.duration;
  m.seed = cfg.seed;
  m.plan = plan;
  m.has_move = plan.has_move();
  m.move_source = plan.move_source;
  m.move_time = cfg.move ? cfg.move->time_s : 0.0;
  m.mixture_file = "mixture.wav";
  write_wav((fs::path(dir) / m.mixture_file).string(), gt.mixtures, cfg.sample_rate);
  const Signals refs = gt.reference_images();
  for (int k = 0; k < cfg.sources; ++k) {
    const std::string src = "source_" + std::to_string(k + 1) + ".wav";
    const std::string img = "image_" + std::to_string(k + 1) + ".wav";
    write_wav((fs::path(dir) / src).string(), gt.sources.row(k), cfg.sample_rate);
    write_wav((fs::path(dir) / img).string(), refs.row(k), cfg.sample_rate);
    m.source_files.push_back(src);
    m.image_files.push_back(img);
  }
  std::FILE* f = std::fopen((fs::path(dir) / "manifest.json").string().c_str(), "wb");
  if (!f) throw std::runtime_error(dir + ": cannot write manifest.json");
  const std::string text = manifest_json(m);
  std::fwrite(text.data(), 1, text.size(), f);
  std::fclose(f);
  return m;
}

ScenarioConfig default_scenario(std::uint64_t seed) {
  ScenarioConfig cfg;
  cfg.sources = 3;
  cfg.duration = 60.0;
  cfg.sample_rate = 16000.0;
  cfg.seed = seed;
  cfg.move = MoveSpec{2, 30.0, {}, {}};
  return cfg;
}

}  // namespace auxiva
