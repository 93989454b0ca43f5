#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "auxiva/stft.hpp"

namespace auxiva {

enum class MixingKind { Instantaneous, Convolutive };

using Filter = std::vector<double>;
/// filters[m][k]: impulse response from source k to microphone m.
using FilterBank = std::vector<std::vector<Filter>>;

/// The moving source switches its mixing column (or filter set) at `time_s`.
struct MoveSpec {
  int source = 0;  // 0-based
  double time_s = 0.0;
  /// Post-move column; generated when empty (instantaneous mode).
  Eigen::VectorXd column;
  /// Post-move filters per microphone; generated when empty (convolutive mode).
  std::vector<Filter> filters;
};

struct ScenarioConfig {
  int sources = 3;
  double duration = 60.0;
  double sample_rate = 16000.0;
  std::uint64_t seed = 1;
  MixingKind mixing = MixingKind::Instantaneous;
  /// Instantaneous mixing matrix; random (unit-norm columns, bounded
  /// condition number) when empty.
  Eigen::MatrixXd matrix;
  /// Convolutive filters; sparse synthetic echoes when empty.
  FilterBank filters;
  double max_condition = 10.0;
  std::optional<MoveSpec> move;
  /// WAV paths, one per source. Synthetic sources when empty.
  std::vector<std::string> source_files;

  long samples() const;
  void validate() const;
};

/// Fully resolved mixing operator: every random choice already drawn.
struct MixingPlan {
  MixingKind kind = MixingKind::Instantaneous;
  int sources = 0;
  FilterBank before;
  FilterBank after;  // equals `before` without a move
  int move_source = -1;
  long switch_sample = -1;
  /// Instantaneous-mode matrices (before / after the move).
  Eigen::MatrixXd matrix_before;
  Eigen::MatrixXd matrix_after;

  bool has_move() const noexcept { return move_source >= 0; }
};

struct GroundTruth {
  Signals sources;
  Signals mixtures;
  /// images[k] is source k as observed at every microphone.
  std::vector<Signals> images;

  /// K x N: each source's image at microphone 1.
  Signals reference_images() const;
};

/// Independent super-Gaussian test sources: white Gaussian noise under a
/// smooth random log-normal envelope (2-8 Hz bandwidth), unit RMS.
Signals synth_sources(int count, double duration, double sample_rate, std::uint64_t seed);

/// Random K x K matrix with unit-norm columns and condition number at most
/// `max_condition` (rejection sampled).
Eigen::MatrixXd random_mixing_matrix(int K, double max_condition, std::uint64_t seed);

double condition_number(const Eigen::MatrixXd& m);

MixingPlan plan_mixing(const ScenarioConfig& cfg);

/// Superposition of per-source images under `plan`.
GroundTruth mix(const MixingPlan& plan, const Signals& sources);

/// Convenience: sources (synthetic or loaded) + plan + mix.
GroundTruth simulate(const ScenarioConfig& cfg, MixingPlan* plan_out = nullptr);

/// Parses the flat key = value scenario format (see docs/formats.md).
ScenarioConfig load_scenario(const std::string& path);
ScenarioConfig parse_scenario(const std::string& text, const std::string& origin = "<string>");

}  // namespace auxiva
