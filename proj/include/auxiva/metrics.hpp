#pragma once

#include <Eigen/Core>

#include <vector>

#include "auxiva/stft.hpp"

namespace auxiva {

inline constexpr double kSdrCapDb = 100.0;

struct SdrValue {
  double db = 0.0;
  /// True when the value hit the +/-100 dB cap.
  bool capped = false;
};

/// Scale-invariant SDR: beta = <Y,S>/|S|^2, 10 log10(|beta S|^2 / |Y - beta S|^2).
SdrValue si_sdr(const Eigen::Ref<const Eigen::VectorXd>& reference,
                const Eigen::Ref<const Eigen::VectorXd>& estimate);

struct SegmentedSdr {
  long segment_len = 32000;
  std::vector<SdrValue> segments;
  SdrValue overall;
};

/// si_sdr over consecutive non-overlapping segments of length L (the
/// trailing remainder is dropped) plus the whole-signal value.
SegmentedSdr seg_sdr(const Eigen::Ref<const Eigen::VectorXd>& reference,
                     const Eigen::Ref<const Eigen::VectorXd>& estimate, long L);

/// perm[k] is the estimate row matched to reference k; maximizes the summed
/// whole-signal si_sdr by enumerating all K! assignments (K <= 6).
std::vector<int> resolve_permutation(const Signals& references, const Signals& estimates);

struct SdrImprovement {
  std::vector<int> permutation;
  /// [source][segment]
  std::vector<std::vector<double>> segment_sdr;
  std::vector<std::vector<double>> segment_improvement;
  std::vector<double> overall_sdr;
  std::vector<double> overall_improvement;

  double mean_overall_improvement() const;
  /// Mean improvement over sources and over segments [first, last).
  double mean_segment_improvement(std::size_t first, std::size_t last) const;
};

/// SDR(reference, estimate) - SDR(reference, mixture) per source, after
/// global permutation alignment. `references` are the source images at
/// microphone 1 and `mixture` is microphone 1.
SdrImprovement sdr_improvement(const Signals& references, const Eigen::Ref<const Eigen::VectorXd>& mixture,
                               const Signals& estimates, long L);

}  // namespace auxiva
