#pragma once

#include <vector>

#include "tiss/frontend.hpp"
#include "tiss/stft.hpp"
#include "tiss/types.hpp"

namespace tiss {

struct WpeConfig {
  int taps = 5;
  int delay = 3;
  int iterations = 1;
  // Relative loading passed to regularized_solve for the normal equations.
  double epsilon = 1e-6;
  // Lower bound on the per-bin variance estimate.
  double floor = 1e-10;

  void validate() const;
};

// Per-frequency prediction matrices Z_f of shape M x ML.
struct WpeFilter {
  std::vector<CMatrix> Z;
  int taps = 0;
  int delay = 1;
};

struct WpeResult {
  SpectralTensor output;
  WpeFilter filter;
  // Weighted prediction-error objective
  //   sum_fn M log(lambda_fn) + ||x_fn - Z_f xbar_fn||^2 / lambda_fn,
  // lambda_fn = max(floor, ||x_fn - Z_f xbar_fn||^2 / M),
  // for Z = 0 followed by one entry per iteration.
  std::vector<double> objective_trace;
};

// Inverse variance weights 1 / max(floor, (1/M) ||d_fn||^2), F x N.
RMatrix wpe_weights(const SpectralTensor& d, double floor);

// x_fn - Z_f xbar_fn.
SpectralTensor apply_wpe_filter(const SpectralTensor& x, const WpeFilter& filter);

double wpe_objective(const SpectralTensor& dereverberated, double floor);

// Iterative multichannel linear-prediction dereverberation. Weights start from
// the observation power and are refreshed from the current output before
// each re-estimation of Z.
WpeResult wpe_dereverb(const SpectralTensor& x, const WpeConfig& cfg = {});
MultichannelSpectrogram wpe_dereverb(const MultichannelSpectrogram& x, const WpeConfig& cfg,
                                     WpeFilter* filter = nullptr);

}  // namespace tiss
