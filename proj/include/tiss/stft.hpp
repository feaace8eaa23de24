#pragma once

#include <string>
#include <vector>

#include "tiss/types.hpp"
#include "tiss/wav.hpp"

namespace tiss {

enum class WindowKind { kHann, kRectangular };

// Frame layout of the short-time Fourier transform. Frame n covers samples
// [n * hop, n * hop + window_length), zero-padded to fft_length before the
// transform. The defaults are 25 ms / 10 ms at 16 kHz with a 512-point FFT.
struct StftConfig {
  int window_length = 400;
  int hop = 160;
  int fft_length = 512;
  WindowKind window = WindowKind::kHann;

  int num_bins() const { return fft_length / 2 + 1; }
  void validate() const;

  bool operator==(const StftConfig&) const = default;
};

WindowKind parse_window(const std::string& name);

// Analysis taper (periodic Hann or all ones).
std::vector<double> analysis_window(const StftConfig& cfg);

// Canonical dual of the analysis taper for the configured hop:
// g[t] = w[t] / sum_m w[t + m * hop]^2. Overlap-adding g-weighted inverse
// frames reconstructs the input exactly wherever every covering frame exists.
std::vector<double> synthesis_window(const StftConfig& cfg);

struct MultichannelSpectrogram {
  SpectralTensor data;  // channels x (fft_length/2 + 1) x frames
  StftConfig config;
  std::size_t num_samples = 0;
  double sample_rate = 16000.0;

  std::size_t channels() const { return data.channels(); }
  std::size_t bins() const { return data.bins(); }
  std::size_t frames() const { return data.frames(); }
};

std::size_t num_frames(std::size_t num_samples, const StftConfig& cfg);

// One-sided analysis. No normalization is applied on the forward side.
MultichannelSpectrogram stft(const Waveform& w, const StftConfig& cfg = {});

// Weighted overlap-add synthesis with the canonical dual taper. DC and
// Nyquist bins are taken as real.
Waveform istft(const MultichannelSpectrogram& s);

}  // namespace tiss
