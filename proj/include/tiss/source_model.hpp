#pragma once

#include <string>

#include "tiss/frontend.hpp"
#include "tiss/types.hpp"

namespace tiss {

enum class SourceVariant {
  kGauss,    // time-varying Gaussian, variance shared across frequency
  kLaplace,  // spherical Laplace over the frequency vector
  kUnit,     // constant weights
};

struct SourceModel {
  SourceVariant variant = SourceVariant::kLaplace;
  double floor = 1e-10;

  void validate() const;
};

// "gauss" | "laplace" | "unit"
SourceModel parse_source_model(const std::string& name, double floor = 1e-10);
std::string to_string(SourceVariant v);

// Strictly positive F x N weight mask.
struct WeightMask {
  RMatrix u;
};

// Weights u_fn(Y_k) for one source given its F x N spectrogram:
//   Gauss:   1 / max(floor, (1/F) sum_f |y_fn|^2)
//   Laplace: 1 / max(floor, 2 sqrt(sum_f |y_fn|^2))
//   Unit:    1
WeightMask weights(const SourceModel& model, const CMatrix& y_k);

// Same weights for every source of an estimate; result[k] is F x N.
std::vector<WeightMask> weights(const SourceModel& model, const SourceEstimates& y);

// Per-frame weight from the frame power s_n = sum_f |y_fn|^2. Gauss and
// Laplace weights are constant across frequency.
double frame_weight(const SourceModel& model, double frame_power, std::size_t num_bins);

// Contrast phi(s_n) whose tangent majorizer at s0 has slope
// frame_weight(s0); summing it over frames gives the source's share of the
// objective that the weighted cost majorizes. phi is concave and continuous
// across the floor breakpoint.
double frame_contrast(const SourceModel& model, double frame_power, std::size_t num_bins);

}  // namespace tiss
