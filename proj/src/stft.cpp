#include "tiss/stft.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include <unsupported/Eigen/FFT>

namespace tiss {

void StftConfig::validate() const {
  if (hop <= 0 || window_length <= 0 || fft_length <= 0) {
    throw std::invalid_argument("stft: sizes must be positive");
  }
  if (hop > window_length || window_length > fft_length) {
    throw std::invalid_argument("stft: need hop <= window_length <= fft_length");
  }
  if (fft_length % 2 != 0) throw std::invalid_argument("stft: fft_length must be even");
}

WindowKind parse_window(const std::string& name) {
  if (name == "hann") return WindowKind::kHann;
  if (name == "rect" || name == "rectangular") return WindowKind::kRectangular;
  throw std::invalid_argument("unknown window: " + name);
}

std::vector<double> analysis_window(const StftConfig& cfg) {
  std::vector<double> w(static_cast<std::size_t>(cfg.window_length), 1.0);
  if (cfg.window == WindowKind::kHann) {
    const double n = cfg.window_length;
    for (std::size_t t = 0; t < w.size(); ++t) {
      w[t] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(t) / n);
    }
  }
  return w;
}

std::vector<double> synthesis_window(const StftConfig& cfg) {
  cfg.validate();
  const auto w = analysis_window(cfg);
  const int len = cfg.window_length;
  std::vector<double> g(w.size());
  for (int t = 0; t < len; ++t) {
    double denom = 0.0;
    for (int s = t % cfg.hop; s < len; s += cfg.hop) denom += w[s] * w[s];
    if (denom <= 0.0) throw std::invalid_argument("stft: window/hop pair has no dual");
    g[t] = w[t] / denom;
  }
  return g;
}

std::size_t num_frames(std::size_t num_samples, const StftConfig& cfg) {
  // Every frame that starts inside the signal is kept, so the tail is
  // covered by the full set of overlapping frames.
  const auto hop = static_cast<std::size_t>(cfg.hop);
  return num_samples == 0 ? 1 : (num_samples + hop - 1) / hop;
}

MultichannelSpectrogram stft(const Waveform& w, const StftConfig& cfg) {
  cfg.validate();
  w.validate();
  if (w.num_samples() == 0) throw std::invalid_argument("stft: empty waveform");
  for (const auto& ch : w.channels) {
    for (double x : ch) {
      if (!std::isfinite(x)) throw std::invalid_argument("stft: non-finite sample");
    }
  }

  const std::size_t nch = w.num_channels();
  const std::size_t nsamp = w.num_samples();
  const std::size_t nframes = num_frames(nsamp, cfg);
  const std::size_t nbins = static_cast<std::size_t>(cfg.num_bins());
  const auto win = analysis_window(cfg);

  MultichannelSpectrogram out;
  out.config = cfg;
  out.num_samples = nsamp;
  out.sample_rate = w.sample_rate;
  out.data = SpectralTensor(nch, nbins, nframes);

  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
  std::vector<double> frame(static_cast<std::size_t>(cfg.fft_length));
  std::vector<cplx> spec;
  for (std::size_t m = 0; m < nch; ++m) {
    const auto& x = w.channels[m];
    for (std::size_t n = 0; n < nframes; ++n) {
      std::fill(frame.begin(), frame.end(), 0.0);
      const std::size_t start = n * static_cast<std::size_t>(cfg.hop);
      for (std::size_t t = 0; t < win.size() && start + t < nsamp; ++t) {
        frame[t] = win[t] * x[start + t];
      }
      fft.fwd(spec, frame);
      for (std::size_t f = 0; f < nbins; ++f) out.data(m, f, n) = spec[f];
    }
  }
  return out;
}

Waveform istft(const MultichannelSpectrogram& s) {
  const StftConfig& cfg = s.config;
  cfg.validate();
  if (s.bins() != static_cast<std::size_t>(cfg.num_bins())) {
    throw std::invalid_argument("istft: bin count does not match config");
  }
  if (s.frames() != num_frames(s.num_samples, cfg)) {
    throw std::invalid_argument("istft: frame count does not match config");
  }
  const auto g = synthesis_window(cfg);
  const std::size_t nbins = s.bins();
  const std::size_t nfft = static_cast<std::size_t>(cfg.fft_length);

  Waveform out;
  out.sample_rate = s.sample_rate;
  out.channels.assign(s.channels(), std::vector<double>(s.num_samples, 0.0));

  Eigen::FFT<double> fft;
  std::vector<cplx> full(nfft);
  std::vector<cplx> frame;
  for (std::size_t m = 0; m < s.channels(); ++m) {
    auto& y = out.channels[m];
    for (std::size_t n = 0; n < s.frames(); ++n) {
      for (std::size_t f = 0; f < nbins; ++f) full[f] = s.data(m, f, n);
      full[0] = full[0].real();
      full[nbins - 1] = full[nbins - 1].real();
      for (std::size_t f = nbins; f < nfft; ++f) full[f] = std::conj(full[nfft - f]);
      fft.inv(frame, full);
      const std::size_t start = n * static_cast<std::size_t>(cfg.hop);
      for (std::size_t t = 0; t < g.size() && start + t < y.size(); ++t) {
        y[start + t] += g[t] * frame[t].real();
      }
    }
  }
  return out;
}

}  // namespace tiss
