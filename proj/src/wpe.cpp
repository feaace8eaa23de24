#include "tiss/wpe.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "tiss/parallel.hpp"
#include "tiss/solve.hpp"

namespace tiss {

void WpeConfig::validate() const {
  if (taps < 1) throw std::invalid_argument("wpe: taps must be >= 1");
  if (delay < 1) throw std::invalid_argument("wpe: delay must be >= 1");
  if (iterations < 1) throw std::invalid_argument("wpe: iterations must be >= 1");
  if (!(epsilon >= 0.0)) throw std::invalid_argument("wpe: epsilon must be >= 0");
  if (!(floor > 0.0)) throw std::invalid_argument("wpe: floor must be positive");
}

RMatrix wpe_weights(const SpectralTensor& d, double floor) {
  const double inv_m = 1.0 / static_cast<double>(d.channels());
  RMatrix u(static_cast<Eigen::Index>(d.bins()), static_cast<Eigen::Index>(d.frames()));
  for (std::size_t f = 0; f < d.bins(); ++f) {
    const CMatrix& df = d.bin(f);
    for (Eigen::Index n = 0; n < df.cols(); ++n) {
      u(static_cast<Eigen::Index>(f), n) = 1.0 / std::max(floor, inv_m * df.col(n).squaredNorm());
    }
  }
  return u;
}

SpectralTensor apply_wpe_filter(const SpectralTensor& x, const WpeFilter& filter) {
  if (filter.Z.size() != x.bins()) throw std::invalid_argument("wpe: filter bin count mismatch");
  const StackedObservation xt = build_stacked(x, filter.taps, filter.delay);
  const auto m = static_cast<Eigen::Index>(x.channels());
  SpectralTensor out = x;
  for_each_bin(x.bins(), [&](std::size_t f) {
    const CMatrix& z = filter.Z[f];
    if (z.rows() != m || z.cols() != m * filter.taps) {
      throw std::invalid_argument("wpe: filter shape mismatch");
    }
    out.bin(f).noalias() -= z * xt.data.bin(f).bottomRows(m * filter.taps);
  });
  return out;
}

double wpe_objective(const SpectralTensor& d, double floor) {
  const double m = static_cast<double>(d.channels());
  double acc = 0.0;
  for (std::size_t f = 0; f < d.bins(); ++f) {
    const CMatrix& df = d.bin(f);
    for (Eigen::Index n = 0; n < df.cols(); ++n) {
      const double e = df.col(n).squaredNorm();
      const double lambda = std::max(floor, e / m);
      acc += m * std::log(lambda) + e / lambda;
    }
  }
  return acc;
}

WpeResult wpe_dereverb(const SpectralTensor& x, const WpeConfig& cfg) {
  cfg.validate();
  if (!x.all_finite()) throw std::invalid_argument("wpe: non-finite input");
  const auto m = static_cast<Eigen::Index>(x.channels());
  const Eigen::Index ml = m * cfg.taps;
  const StackedObservation xt = build_stacked(x, cfg.taps, cfg.delay);

  WpeResult result;
  result.filter.taps = cfg.taps;
  result.filter.delay = cfg.delay;
  result.filter.Z.assign(x.bins(), CMatrix::Zero(m, ml));
  result.output = x;
  result.objective_trace.push_back(wpe_objective(result.output, cfg.floor));

  for (int it = 0; it < cfg.iterations; ++it) {
    const RMatrix u = wpe_weights(result.output, cfg.floor);
    for_each_bin(x.bins(), [&](std::size_t f) {
      const CMatrix& xf = xt.data.bin(f);
      const auto past = xf.bottomRows(ml);
      const auto cur = xf.topRows(m);
      const CMatrix weighted = past * u.row(static_cast<Eigen::Index>(f)).asDiagonal();
      const CMatrix r_past = weighted * past.adjoint();
      const CMatrix r_cross = weighted * cur.adjoint();
      try {
        result.filter.Z[f] = regularized_solve(r_past, r_cross, cfg.epsilon).adjoint();
      } catch (const DegenerateStateError& e) {
        throw DegenerateStateError("wpe at bin " + std::to_string(f) + ": " + e.what());
      }
      result.output.bin(f) = cur - result.filter.Z[f] * past;
    });
    result.objective_trace.push_back(wpe_objective(result.output, cfg.floor));
  }
  return result;
}

MultichannelSpectrogram wpe_dereverb(const MultichannelSpectrogram& x, const WpeConfig& cfg,
                                     WpeFilter* filter) {
  WpeResult r = wpe_dereverb(x.data, cfg);
  MultichannelSpectrogram out = x;
  out.data = std::move(r.output);
  if (filter != nullptr) *filter = std::move(r.filter);
  return out;
}

}  // namespace tiss
