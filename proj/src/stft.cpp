#include "auxiva/stft.hpp"

#include <unsupported/Eigen/FFT>

#include <cmath>
#include <numbers>

#include "auxiva/errors.hpp"

namespace auxiva {

void StftConfig::validate() const {
  require(frame_len >= 2 && (frame_len & (frame_len - 1)) == 0,
          "stft: frame_len must be a power of two");
  require(hop * 2 == frame_len, "stft: hop must equal frame_len / 2");
  require(sample_rate > 0.0, "stft: sample_rate must be positive");
}

int StftConfig::frames_for(long samples) const {
  return static_cast<int>(samples / hop) + 1;
}

std::vector<double> periodic_hamming(int n) {
  std::vector<double> w(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    w[i] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * i / n);
  }
  return w;
}

Spectrogram::Spectrogram(int channels, int frames, int bins)
    : channels_(channels), frames_(frames), bins_(bins) {
  require(channels >= 0 && frames >= 0 && bins >= 0, "Spectrogram: negative shape");
  data_.assign(static_cast<std::size_t>(channels) * frames * bins, {});
}

void Spectrogram::get_frame(int t, SpectralFrame& out) const {
  require(t >= 0 && t < frames_, "Spectrogram::get_frame: frame out of range");
  out.resize(channels_, bins_);
  for (int k = 0; k < channels_; ++k) {
    const auto* src = &data_[index(k, t, 0)];
    for (int f = 0; f < bins_; ++f) out(k, f) = src[f];
  }
}

void Spectrogram::set_frame(int t, const SpectralFrame& in) {
  require(t >= 0 && t < frames_, "Spectrogram::set_frame: frame out of range");
  require(in.rows() == channels_ && in.cols() == bins_, "Spectrogram::set_frame: shape mismatch");
  for (int k = 0; k < channels_; ++k) {
    auto* dst = &data_[index(k, t, 0)];
    for (int f = 0; f < bins_; ++f) dst[f] = in(k, f);
  }
}

Spectrogram& Spectrogram::operator*=(double s) {
  for (auto& v : data_) v *= s;
  return *this;
}

Spectrogram analyze(const Signals& signal, const StftConfig& cfg) {
  cfg.validate();
  require(signal.rows() > 0 && signal.cols() > 0, "analyze: empty signal");
  require(signal.cols() >= cfg.frame_len, "analyze: signal shorter than one frame");

  const int n = cfg.frame_len;
  const int pad = n / 2;
  const long samples = signal.cols();
  const int frames = cfg.frames_for(samples);
  const int bins = cfg.bins();
  const auto window = periodic_hamming(n);

  Spectrogram spec(static_cast<int>(signal.rows()), frames, bins);
  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
  std::vector<double> buf(n);
  std::vector<std::complex<double>> out;

  for (int k = 0; k < signal.rows(); ++k) {
    for (int t = 0; t < frames; ++t) {
      const long start = static_cast<long>(t) * cfg.hop - pad;
      for (int i = 0; i < n; ++i) {
        const long s = start + i;
        buf[i] = (s >= 0 && s < samples) ? window[i] * signal(k, s) : 0.0;
      }
      fft.fwd(out, buf);
      for (int f = 0; f < bins; ++f) spec(k, t, f) = out[f];
    }
  }
  return spec;
}

Signals synthesize(const Spectrogram& spec, const StftConfig& cfg, long length) {
  cfg.validate();
  require(spec.bins() == cfg.bins(), "synthesize: bin count does not match frame_len");
  require(spec.frames() >= 1, "synthesize: empty spectrogram");

  const int n = cfg.frame_len;
  const int pad = n / 2;
  const long padded = static_cast<long>(spec.frames() - 1) * cfg.hop + n;
  const long available = padded - pad;
  if (length < 0) length = static_cast<long>(spec.frames() - 1) * cfg.hop;
  require(length <= available, "synthesize: requested length exceeds spectrogram coverage");

  const auto window = periodic_hamming(n);
  std::vector<double> envelope(static_cast<std::size_t>(padded), 0.0);
  for (int t = 0; t < spec.frames(); ++t) {
    for (int i = 0; i < n; ++i) envelope[static_cast<std::size_t>(t) * cfg.hop + i] += window[i] * window[i];
  }

  Signals out = Signals::Zero(spec.channels(), length);
  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
  std::vector<std::complex<double>> half(cfg.bins());
  std::vector<double> frame;
  std::vector<double> acc(static_cast<std::size_t>(padded));

  for (int k = 0; k < spec.channels(); ++k) {
    std::fill(acc.begin(), acc.end(), 0.0);
    for (int t = 0; t < spec.frames(); ++t) {
      for (int f = 0; f < cfg.bins(); ++f) half[f] = spec(k, t, f);
      fft.inv(frame, half, n);
      const std::size_t start = static_cast<std::size_t>(t) * cfg.hop;
      for (int i = 0; i < n; ++i) acc[start + i] += window[i] * frame[i];
    }
    for (long s = 0; s < length; ++s) {
      const double env = envelope[s + pad];
      out(k, s) = env > 0.0 ? acc[s + pad] / env : 0.0;
    }
  }
  return out;
}

}  // namespace auxiva
