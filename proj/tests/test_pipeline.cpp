#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "auxiva/errors.hpp"
#include "auxiva/pipeline.hpp"
#include "auxiva/wav.hpp"

using namespace auxiva;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("auxiva_test_pipeline_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

ScenarioConfig short_scenario(bool move) {
  ScenarioConfig cfg;
  cfg.sources = 2;
  cfg.duration = 4.0;
  cfg.seed = 5;
  if (move) cfg.move = MoveSpec{1, 2.0, {}, {}};
  return cfg;
}

}  // namespace

TEST_CASE("parse_selector") {
  StftConfig stft;
  CHECK_FALSE(parse_selector("all", stft).restricted());
  const auto s = parse_selector("one:3:100", stft);
  CHECK(s.restricted());
  CHECK(s.switch_frame() == 100);
  REQUIRE(s.subset().size() == 1);
  CHECK(s.subset()[0] == 2);
  // 30 s at 16 kHz with a 512-sample hop.
  CHECK(parse_selector("one:1:30s", stft).switch_frame() == 938);
  CHECK(frame_at_time(30.0, stft) == 938);
  for (const char* bad : {"", "one", "one:0:5", "one:1:", "one:1:x", "one:1:5x", "one:1:-3", "some"}) {
    CHECK_THROWS_AS(parse_selector(bad, stft), ContractViolation);
  }
}

TEST_CASE("standard methods and their options") {
  const auto methods = standard_methods();
  REQUIRE(methods.size() == 4);
  CHECK(methods[0].label == "ISS(all)");
  CHECK(methods[1].label == "ISS(one)");
  CHECK(methods[2].label == "IP(all)");
  CHECK(methods[3].label == "IP(one)");
  const auto one = options_for(methods[3], 40, 1);
  CHECK(one.online.method == UpdateMethod::IP);
  CHECK(one.online.selector.switch_frame() == 40);
  CHECK(one.online.selector.subset()[0] == 1);
  CHECK_FALSE(options_for(methods[0], 40, 1).online.selector.restricted());
}

TEST_CASE("manifest round trip") {
  for (const bool move : {false, true}) {
    MixingPlan plan;
    const auto cfg = short_scenario(move);
    const GroundTruth gt = simulate(cfg, &plan);
    const fs::path dir = scratch(move ? "move" : "static");
    const Manifest m = write_scenario(dir.string(), cfg, gt, plan);
    const std::string text = slurp(dir / "manifest.json");
    CHECK((text.find("\"move\"") != std::string::npos) == move);
    const Manifest r = parse_manifest(text);
    CHECK(r.sources == 2);
    CHECK(r.samples == gt.mixtures.cols());
    CHECK(r.sample_rate == 16000.0);
    CHECK(r.has_move == move);
    CHECK((r.plan.matrix_before - plan.matrix_before).norm() == 0.0);
    if (move) {
      CHECK(r.move_source == 1);
      CHECK(r.move_time == 2.0);
      CHECK(r.plan.switch_sample == plan.switch_sample);
      CHECK((r.plan.matrix_after - plan.matrix_after).norm() == 0.0);
    }
    REQUIRE(r.image_files.size() == 2);
    const WavData img = read_wav((dir / r.image_files[1]).string());
    CHECK(img.sample_rate == 16000.0);
    CHECK((img.samples.row(0) - gt.reference_images().row(1)).cwiseAbs().maxCoeff() <= 1e-6);
    CHECK(manifest_json(r) == text);
  }
  CHECK_THROWS_AS(parse_manifest("{}"), ContractViolation);
  CHECK_THROWS_AS(parse_manifest("not json"), ContractViolation);
  CHECK(default_scenario().move->time_s == 30.0);
  CHECK(default_scenario().move->source == 2);
}

TEST_CASE("WAV round trip") {
  const fs::path dir = scratch("wav");
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-0.9, 0.9);
  Signals s(3, 1001);
  for (long i = 0; i < s.size(); ++i) s.data()[i] = u(rng);
  write_wav((dir / "a.wav").string(), s, 8000.0);
  const WavData w = read_wav((dir / "a.wav").string());
  CHECK(w.sample_rate == 8000.0);
  REQUIRE(w.samples.rows() == 3);
  REQUIRE(w.samples.cols() == 1001);
  // Stored as 32-bit float.
  CHECK((w.samples - s).cwiseAbs().maxCoeff() <= 1e-7);
  CHECK_THROWS(read_wav((dir / "missing.wav").string()));
}

TEST_CASE("evaluation rows and CSV shape") {
  MixingPlan plan;
  const GroundTruth gt = simulate(short_scenario(false), &plan);
  const Signals refs = gt.reference_images();
  const Eigen::VectorXd mic1 = gt.mixtures.row(0).transpose();
  const Evaluation ev = evaluate("X", refs, mic1, refs, 16000, 16000.0);
  REQUIRE(ev.rows.size() == 4 * 2);
  CHECK(ev.rows[0].segment_index == 0);
  CHECK(ev.rows[0].source == 1);
  for (const auto& r : ev.rows) CHECK(r.sdr_db == doctest::Approx(100.0));  // capped
  const std::string csv = format_csv(ev.rows);
  CHECK(csv.rfind("method,segment_index,time_s,source,sdr_db,sdr_improvement_db\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 9);
  CHECK(format_csv(ev.rows, false).find("method,") == std::string::npos);
  CHECK(csv.find("X,1,1.000,2,") != std::string::npos);
}

TEST_CASE("separate: determinism, shapes and output_for_source") {
  MixingPlan plan;
  const GroundTruth gt = simulate(short_scenario(false), &plan);
  SeparationOptions opts;
  const SeparationRun a = separate(gt.mixtures, opts);
  const SeparationRun b = separate(gt.mixtures, opts);
  REQUIRE(a.separated.rows() == 2);
  CHECK(a.separated.cols() == gt.mixtures.cols());
  CHECK((a.separated - b.separated).norm() == 0.0);
  CHECK(a.frames == opts.stft.frames_for(gt.mixtures.cols()));
  CHECK(a.update_seconds <= a.total_seconds);

  opts.threads = 3;
  CHECK((separate(gt.mixtures, opts).separated - a.separated).norm() == 0.0);

  const Signals refs = gt.reference_images();
  Signals swapped(2, refs.cols());
  swapped.row(0) = 0.5 * refs.row(1);
  swapped.row(1) = -2.0 * refs.row(0);
  CHECK(output_for_source(refs, swapped, refs.cols(), 0) == 1);
  CHECK(output_for_source(refs, swapped, refs.cols(), 1) == 0);
  CHECK(output_for_source(refs, refs, 16000, 1) == 1);
}
