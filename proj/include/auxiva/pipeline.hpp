#pragma once

// End-to-end glue: STFT -> online engine -> back-projection -> inverse STFT,
// evaluation against ground truth, and the on-disk manifest / report formats.

#include <string>
#include <vector>

#include "auxiva/metrics.hpp"
#include "auxiva/scenario.hpp"
#include "auxiva/separator.hpp"
#include "auxiva/stft.hpp"

namespace auxiva {

struct SeparationOptions {
  OnlineConfig<double> online;
  ContrastKind contrast = ContrastKind::Laplace;
  double r_floor = 1e-8;
  StftConfig stft;
  int threads = 1;
};

/// Parses "all", "one:<k>:<frame>" or "one:<k>:<seconds>s" (k is 1-based).
SourceSelector parse_selector(const std::string& text, const StftConfig& stft);
/// Frame index whose analysis window is centred on `seconds`.
int frame_at_time(double seconds, const StftConfig& stft);

struct SeparationRun {
  Signals separated;  // back-projected onto microphone 1, K x N
  int frames = 0;
  double update_seconds = 0.0;      // process_frame only
  double projection_seconds = 0.0;  // back-projection
  double stft_seconds = 0.0;        // analysis + synthesis
  double total_seconds = 0.0;
  std::vector<FrameDiagnostic> diagnostics;
};

SeparationRun separate(const Signals& mixtures, const SeparationOptions& opts);

/// The four configurations compared in the moving-source experiment.
struct MethodSpec {
  std::string label;  // e.g. "ISS(one)"
  UpdateMethod method;
  bool one;
};
std::vector<MethodSpec> standard_methods();

/// Options for one of the standard methods; `switch_frame` and `moving`
/// (0-based) only matter for the "one" variants.
SeparationOptions options_for(const MethodSpec& spec, int switch_frame, int moving,
                              const SeparationOptions& base = {});

/// Output index carrying reference `source` in the first `samples` samples of
/// `separated`, found by permutation alignment. Blind separation orders its
/// outputs arbitrarily, so the "one" variants must be told which output to
/// keep updating.
int output_for_source(const Signals& reference_images, const Signals& separated, long samples, int source);

struct EvaluationRow {
  std::string method;
  int segment_index = 0;
  double time_s = 0.0;
  int source = 0;  // 1-based
  double sdr_db = 0.0;
  double sdr_improvement_db = 0.0;
};

struct Evaluation {
  std::string method;
  SdrImprovement improvement;
  std::vector<EvaluationRow> rows;
};

Evaluation evaluate(const std::string& method, const Signals& reference_images,
                    const Eigen::Ref<const Eigen::VectorXd>& mic1, const Signals& estimates, long segment_len,
                    double sample_rate);

/// CSV with header method,segment_index,time_s,source,sdr_db,sdr_improvement_db.
std::string format_csv(const std::vector<EvaluationRow>& rows, bool header = true);

// Manifest ------------------------------------------------------------------

struct Manifest {
  int sources = 0;
  double sample_rate = 0.0;
  long samples = 0;
  double duration = 0.0;
  std::uint64_t seed = 0;
  MixingPlan plan;
  bool has_move = false;
  int move_source = -1;  // 0-based
  double move_time = 0.0;
  std::string mixture_file;
  std::vector<std::string> source_files;
  std::vector<std::string> image_files;
};

std::string manifest_json(const Manifest& m);
Manifest parse_manifest(const std::string& json_text);

/// Writes mixture.wav, source_<k>.wav, image_<k>.wav and manifest.json into
/// `dir` (created if needed). Returns the manifest.
Manifest write_scenario(const std::string& dir, const ScenarioConfig& cfg, const GroundTruth& gt,
                        const MixingPlan& plan);

/// The default moving-source scenario: three synthetic sources, 60 s at
/// 16 kHz, source 3 switches its mixing column at 30 s.
ScenarioConfig default_scenario(std::uint64_t seed = 1);

}  // namespace auxiva
