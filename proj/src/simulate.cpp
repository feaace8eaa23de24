#include "tiss/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>
#include <stdexcept>

#include <unsupported/Eigen/FFT>

#include "json.hpp"

namespace tiss {

namespace {

constexpr std::size_t kDirectConvolutionMaxTaps = 64;
constexpr double kAdditivityTolerance = 1e-10;

double energy(const std::vector<double>& x) {
  double acc = 0.0;
  for (double v : x) acc += v * v;
  return acc;
}

std::vector<double> hann(std::size_t len) {
  std::vector<double> w(len);
  for (std::size_t t = 0; t < len; ++t) {
    w[t] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * (t + 0.5) / static_cast<double>(len));
  }
  return w;
}

// Bursty activity envelope: segments of 80-400 ms, each on (gain 0.3-1) with
// probability 0.65 or nearly silent, smoothed by a 20 ms Hann kernel.
std::vector<double> activity_envelope(std::size_t len, double fs, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> seg_ms(80.0, 400.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> raw(len);
  std::size_t t = 0;
  while (t < len) {
    const auto seg = static_cast<std::size_t>(seg_ms(rng) * fs / 1000.0);
    const double gain = unit(rng) < 0.65 ? 0.3 + 0.7 * unit(rng) : 0.02;
    for (std::size_t i = 0; i < seg && t < len; ++i, ++t) raw[t] = gain;
  }
  auto kernel = hann(static_cast<std::size_t>(0.02 * fs));
  const double ksum = std::accumulate(kernel.begin(), kernel.end(), 0.0);
  for (double& k : kernel) k /= ksum;
  std::vector<double> env(len, 0.0);
  const std::size_t half = kernel.size() / 2;
  for (std::size_t n = 0; n < len; ++n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < kernel.size(); ++i) {
      const std::ptrdiff_t idx = static_cast<std::ptrdiff_t>(n + i) - static_cast<std::ptrdiff_t>(half);
      if (idx >= 0 && idx < static_cast<std::ptrdiff_t>(len)) acc += kernel[i] * raw[static_cast<std::size_t>(idx)];
    }
    env[n] = acc;
  }
  return env;
}

std::vector<double> ar1_noise(std::size_t len, double pole, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> x(len);
  double state = 0.0;
  for (std::size_t t = 0; t < len; ++t) {
    state = gauss(rng) + pole * state;
    x[t] = state;
  }
  return x;
}

void normalize_rms(std::vector<double>& x) {
  const double e = energy(x);
  if (e <= 0.0) return;
  const double scale = std::sqrt(static_cast<double>(x.size()) / e);
  for (double& v : x) v *= scale;
}

std::vector<double> make_source(std::size_t len, double fs, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> pole(0.85, 0.97);
  auto x = ar1_noise(len, pole(rng), rng);
  const auto env = activity_envelope(len, fs, rng);
  for (std::size_t t = 0; t < len; ++t) x[t] *= env[t];
  normalize_rms(x);
  return x;
}

std::vector<double> reverberant_filter(int delay, double gain, const SceneParams& p,
                                       std::mt19937_64& rng) {
  const auto tail_len = static_cast<std::size_t>(std::max(1.0, p.rt_ms * p.sample_rate / 1000.0));
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> h(static_cast<std::size_t>(delay) + 1 + tail_len, 0.0);
  h[static_cast<std::size_t>(delay)] = gain;
  // 60 dB energy decay over the tail: amplitude factor 10^-3.
  const double rate = 3.0 * std::log(10.0) / static_cast<double>(tail_len);
  double tail_energy = 0.0;
  for (std::size_t t = 0; t < tail_len; ++t) {
    const double v = gauss(rng) * std::exp(-rate * static_cast<double>(t + 1));
    h[static_cast<std::size_t>(delay) + 1 + t] = v;
    tail_energy += v * v;
  }
  const double target = gain * gain * std::pow(10.0, -p.direct_to_reverb_db / 10.0);
  const double scale = tail_energy > 0.0 ? std::sqrt(target / tail_energy) : 0.0;
  for (std::size_t t = 0; t < tail_len; ++t) h[static_cast<std::size_t>(delay) + 1 + t] *= scale;
  return h;
}

Waveform zeros(std::size_t channels, std::size_t len, double fs) {
  Waveform w;
  w.sample_rate = fs;
  w.channels.assign(channels, std::vector<double>(len, 0.0));
  return w;
}

}  // namespace

SceneKind parse_scene_kind(const std::string& name) {
  if (name == "instantaneous") return SceneKind::kInstantaneous;
  if (name == "anechoic") return SceneKind::kAnechoic;
  if (name == "reverberant") return SceneKind::kReverberant;
  throw std::invalid_argument("unknown scene kind: " + name);
}

NoiseKind parse_noise_kind(const std::string& name) {
  if (name == "white") return NoiseKind::kWhite;
  if (name == "diffuse") return NoiseKind::kDiffuse;
  throw std::invalid_argument("unknown noise kind: " + name);
}

std::string to_string(SceneKind kind) {
  switch (kind) {
    case SceneKind::kInstantaneous:
      return "instantaneous";
    case SceneKind::kAnechoic:
      return "anechoic";
    case SceneKind::kReverberant:
      return "reverberant";
  }
  return "unknown";
}

std::string to_string(NoiseKind kind) {
  return kind == NoiseKind::kWhite ? "white" : "diffuse";
}

std::vector<double> fir_filter(const std::vector<double>& x, const std::vector<double>& h) {
  std::vector<double> y(x.size(), 0.0);
  if (x.empty() || h.empty()) return y;
  std::size_t nz = 0;
  for (double v : h) nz += v != 0.0;
  if (h.size() <= kDirectConvolutionMaxTaps || nz <= kDirectConvolutionMaxTaps) {
    for (std::size_t k = 0; k < h.size(); ++k) {
      if (h[k] == 0.0) continue;
      for (std::size_t t = k; t < x.size(); ++t) y[t] += h[k] * x[t - k];
    }
    return y;
  }
  std::size_t nfft = 1;
  while (nfft < x.size() + h.size()) nfft <<= 1;
  Eigen::FFT<double> fft;
  std::vector<double> xp(nfft, 0.0), hp(nfft, 0.0);
  std::copy(x.begin(), x.end(), xp.begin());
  std::copy(h.begin(), h.end(), hp.begin());
  std::vector<cplx> xs, hs, ys(nfft);
  fft.fwd(xs, xp);
  fft.fwd(hs, hp);
  for (std::size_t i = 0; i < nfft; ++i) ys[i] = xs[i] * hs[i];
  std::vector<double> full;
  fft.inv(full, ys);
  std::copy(full.begin(), full.begin() + static_cast<std::ptrdiff_t>(x.size()), y.begin());
  return y;
}

MixtureScene make_scene(const SceneParams& p) {
  if (p.sources < 1 || p.channels < 1) throw std::invalid_argument("scene needs K >= 1 and M >= 1");
  if (!(p.duration_s >= 1.0)) throw std::invalid_argument("scene duration must be at least 1 s");
  if (!(p.sample_rate > 0.0)) throw std::invalid_argument("sample rate must be positive");
  if (p.max_delay < 0) throw std::invalid_argument("max_delay must be >= 0");
  if (p.kind == SceneKind::kReverberant && !(p.rt_ms > 0.0)) {
    throw std::invalid_argument("reverberant scenes need rt_ms > 0");
  }

  MixtureScene scene;
  scene.params = p;
  if (p.sources > p.channels) {
    scene.warnings.push_back("underdetermined scene: more sources than channels");
  }
  const auto len = static_cast<std::size_t>(std::llround(p.duration_s * p.sample_rate));
  const auto nk = static_cast<std::size_t>(p.sources);
  const auto nm = static_cast<std::size_t>(p.channels);
  std::mt19937_64 rng(p.seed);

  for (std::size_t k = 0; k < nk; ++k) scene.sources.push_back(make_source(len, p.sample_rate, rng));

  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> gain_dist(0.5, 1.0);
  std::uniform_int_distribution<int> delay_dist(0, p.max_delay);
  scene.filters.assign(nm, Signals(nk));
  for (std::size_t m = 0; m < nm; ++m) {
    for (std::size_t k = 0; k < nk; ++k) {
      switch (p.kind) {
        case SceneKind::kInstantaneous:
          scene.filters[m][k] = {gauss(rng)};
          break;
        case SceneKind::kAnechoic: {
          const int d = delay_dist(rng);
          std::vector<double> h(static_cast<std::size_t>(d) + 1, 0.0);
          h.back() = gain_dist(rng);
          scene.filters[m][k] = std::move(h);
          break;
        }
        case SceneKind::kReverberant: {
          const int d = delay_dist(rng);
          const double g = gain_dist(rng);
          scene.filters[m][k] = reverberant_filter(d, g, p, rng);
          break;
        }
      }
    }
  }

  const auto images = oracle_images(scene);
  Waveform clean = zeros(nm, len, p.sample_rate);
  for (const auto& img : images) {
    for (std::size_t m = 0; m < nm; ++m) {
      for (std::size_t t = 0; t < len; ++t) clean.channels[m][t] += img.channels[m][t];
    }
  }

  scene.noise.assign(nm, std::vector<double>(len, 0.0));
  if (std::isfinite(p.snr_db)) {
    const double pole = p.noise == NoiseKind::kDiffuse ? 0.7 : 0.0;
    double noise_energy = 0.0, signal_energy = 0.0;
    for (std::size_t m = 0; m < nm; ++m) {
      scene.noise[m] = ar1_noise(len, pole, rng);
      noise_energy += energy(scene.noise[m]);
      signal_energy += energy(clean.channels[m]);
    }
    const double scale = std::sqrt(signal_energy / (noise_energy * std::pow(10.0, p.snr_db / 10.0)));
    for (auto& ch : scene.noise) {
      for (double& v : ch) v *= scale;
    }
  }

  scene.mixture = zeros(nm, len, p.sample_rate);
  for (std::size_t m = 0; m < nm; ++m) {
    for (std::size_t t = 0; t < len; ++t) {
      scene.mixture.channels[m][t] = clean.channels[m][t] + scene.noise[m][t];
    }
  }

  // Render-time check that images plus noise reproduce the mixture, summed
  // in source order rather than through the accumulated clean signal.
  double err = 0.0, ref = 0.0;
  for (std::size_t m = 0; m < nm; ++m) {
    for (std::size_t t = 0; t < len; ++t) {
      double acc = scene.noise[m][t];
      for (const auto& img : images) acc += img.channels[m][t];
      const double d = acc - scene.mixture.channels[m][t];
      err += d * d;
      ref += scene.mixture.channels[m][t] * scene.mixture.channels[m][t];
    }
  }
  if (err > kAdditivityTolerance * kAdditivityTolerance * std::max(ref, 1e-300)) {
    throw std::runtime_error("scene rendering failed the additivity check");
  }
  return scene;
}

std::vector<Waveform> partial_images(const MixtureScene& scene, std::size_t begin,
                                     std::size_t end) {
  const std::size_t nm = scene.filters.size();
  const std::size_t nk = scene.sources.size();
  const std::size_t len = scene.sources.empty() ? 0 : scene.sources.front().size();
  std::vector<Waveform> out;
  for (std::size_t k = 0; k < nk; ++k) {
    Waveform img = zeros(nm, len, scene.params.sample_rate);
    for (std::size_t m = 0; m < nm; ++m) {
      std::vector<double> h = scene.filters[m][k];
      for (std::size_t t = 0; t < h.size(); ++t) {
        if (t < begin || t >= end) h[t] = 0.0;
      }
      img.channels[m] = fir_filter(scene.sources[k], h);
    }
    out.push_back(std::move(img));
  }
  return out;
}

std::vector<Waveform> oracle_images(const MixtureScene& scene) {
  return partial_images(scene, 0, std::numeric_limits<std::size_t>::max());
}

std::string scene_to_json(const MixtureScene& scene) {
  const SceneParams& p = scene.params;
  nlohmann::ordered_json j;
  j["seed"] = p.seed;
  j["sources"] = p.sources;
  j["channels"] = p.channels;
  j["kind"] = to_string(p.kind);
  j["rt_ms"] = p.rt_ms;
  j["direct_to_reverb_db"] = p.direct_to_reverb_db;
  if (std::isfinite(p.snr_db)) {
    j["snr_db"] = p.snr_db;
  } else {
    j["snr_db"] = nullptr;
  }
  j["noise"] = to_string(p.noise);
  j["duration_s"] = p.duration_s;
  j["sample_rate"] = p.sample_rate;
  j["max_delay"] = p.max_delay;
  nlohmann::ordered_json taps = nlohmann::ordered_json::array();
  for (const auto& row : scene.filters) {
    nlohmann::ordered_json r = nlohmann::ordered_json::array();
    for (const auto& h : row) r.push_back(h.size());
    taps.push_back(r);
  }
  j["filter_lengths"] = taps;
  j["warnings"] = scene.warnings;
  return j.dump(2) + "\n";
}

}  // namespace tiss
