#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "tiss/metrics.hpp"
#include "tiss/wav.hpp"

namespace tiss {

enum class SceneKind {
  kInstantaneous,  // real gains only
  kAnechoic,       // per-pair integer delay and gain
  kReverberant,    // direct path plus exponentially decaying random tail
};

enum class NoiseKind {
  kWhite,    // independent white noise per channel
  kDiffuse,  // independent noise per channel with a low-pass tilt
};

SceneKind parse_scene_kind(const std::string& name);
NoiseKind parse_noise_kind(const std::string& name);
std::string to_string(SceneKind kind);
std::string to_string(NoiseKind kind);

struct SceneParams {
  int sources = 2;
  int channels = 2;
  SceneKind kind = SceneKind::kAnechoic;
  // Length of the reverberant tail; its envelope decays by 60 dB over it.
  double rt_ms = 300.0;
  // Tail energy relative to the direct path.
  double direct_to_reverb_db = 0.0;
  // +inf disables the noise term.
  double snr_db = std::numeric_limits<double>::infinity();
  NoiseKind noise = NoiseKind::kDiffuse;
  double duration_s = 5.0;
  double sample_rate = 16000.0;
  // Largest direct-path delay in samples for anechoic/reverberant scenes.
  int max_delay = 8;
  std::uint64_t seed = 0;
};

// Ground truth of a synthetic convolutive mixture:
//   mixture_m = sum_k h_mk * s_k + b_m.
struct MixtureScene {
  SceneParams params;
  Signals sources;                               // K dry signals
  std::vector<Signals> filters;                  // filters[m][k] = h_mk
  Signals noise;                                 // M channels
  Waveform mixture;                              // M channels
  std::vector<std::string> warnings;
};

// Renders a seeded scene. Sources are amplitude-modulated colored noise with
// a low-pass tilt and bursty on/off envelopes. Throws std::invalid_argument
// for durations under one second; K > M only adds a warning.
MixtureScene make_scene(const SceneParams& params);

// Per-source images h_mk * s_k as M-channel waveforms; together with the
// noise they sum to the mixture.
std::vector<Waveform> oracle_images(const MixtureScene& scene);

// Images rendered with each filter restricted to taps [begin, end).
std::vector<Waveform> partial_images(const MixtureScene& scene, std::size_t begin,
                                     std::size_t end);

// Linear convolution truncated to the input length.
std::vector<double> fir_filter(const std::vector<double>& x, const std::vector<double>& h);

std::string scene_to_json(const MixtureScene& scene);

}  // namespace tiss
