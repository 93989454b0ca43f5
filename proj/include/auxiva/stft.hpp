#pragma once

#include <Eigen/Core>

#include <complex>
#include <vector>

namespace auxiva {

/// Channel-major sample block: row k holds channel k.
using Signals = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// All channels at one STFT frame: K rows, F columns (x_ft stacked over f).
using SpectralFrame = Eigen::MatrixXcd;

struct StftConfig {
  int frame_len = 1024;
  int hop = 512;
  double sample_rate = 16000.0;

  int bins() const noexcept { return frame_len / 2 + 1; }
  void validate() const;
  /// Number of frames produced for a signal of `samples` samples.
  int frames_for(long samples) const;
};

/// Periodic (DFT-even) Hamming window.
std::vector<double> periodic_hamming(int n);

/// Complex STFT coefficients indexed [channel][frame][bin].
class Spectrogram {
 public:
  Spectrogram() = default;
  Spectrogram(int channels, int frames, int bins);

  int channels() const noexcept { return channels_; }
  int frames() const noexcept { return frames_; }
  int bins() const noexcept { return bins_; }

  std::complex<double>& operator()(int k, int t, int f) {
    return data_[index(k, t, f)];
  }
  const std::complex<double>& operator()(int k, int t, int f) const {
    return data_[index(k, t, f)];
  }

  /// Copies frame t into `out` (resized to channels x bins).
  void get_frame(int t, SpectralFrame& out) const;
  void set_frame(int t, const SpectralFrame& in);

  Spectrogram& operator*=(double s);

 private:
  std::size_t index(int k, int t, int f) const noexcept {
    return (static_cast<std::size_t>(k) * frames_ + t) * bins_ + f;
  }

  int channels_ = 0;
  int frames_ = 0;
  int bins_ = 0;
  std::vector<std::complex<double>> data_;
};

/// Windowed one-sided FFT of every channel, with frame_len/2 zeros padded on
/// both ends.
Spectrogram analyze(const Signals& signal, const StftConfig& cfg);

/// Weighted overlap-add inverse of analyze(). `length` selects the number of
/// output samples; a negative value yields (T - 1) * hop samples.
Signals synthesize(const Spectrogram& spec, const StftConfig& cfg, long length = -1);

}  // namespace auxiva
