#pragma once

#include <string>

#include "auxiva/stft.hpp"

namespace auxiva {

struct WavData {
  Signals samples;  // channels x frames, full scale = 1.0
  double sample_rate = 0.0;
};

/// Reads 16-bit PCM or 32-bit IEEE float RIFF/WAVE files.
WavData read_wav(const std::string& path);

/// Writes 32-bit IEEE float RIFF/WAVE.
void write_wav(const std::string& path, const Signals& samples, double sample_rate);

}  // namespace auxiva
