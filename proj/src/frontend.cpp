#include "tiss/frontend.hpp"

#include <stdexcept>
#include <string>

#include "tiss/parallel.hpp"

namespace tiss {

StackedObservation build_stacked(const SpectralTensor& x, int taps, int delay) {
  if (taps < 0) throw std::invalid_argument("build_stacked: taps must be >= 0");
  if (delay < 1) throw std::invalid_argument("build_stacked: delay must be >= 1");
  const auto m = static_cast<Eigen::Index>(x.channels());
  const auto n = static_cast<Eigen::Index>(x.frames());

  StackedObservation out;
  out.channels = static_cast<int>(m);
  out.taps = taps;
  out.delay = delay;
  out.data = SpectralTensor(x.channels() * static_cast<std::size_t>(taps + 1), x.bins(),
                            x.frames());
  for_each_bin(x.bins(), [&](std::size_t f) {
    const CMatrix& src = x.bin(f);
    CMatrix& dst = out.data.bin(f);
    dst.topRows(m) = src;
    for (int l = 1; l <= taps; ++l) {
      const Eigen::Index shift = delay + (l - 1);
      if (shift >= n) continue;
      dst.block(m * l, shift, m, n - shift) = src.leftCols(n - shift);
    }
  });
  return out;
}

StackedObservation build_stacked(const MultichannelSpectrogram& x, int taps, int delay) {
  return build_stacked(x.data, taps, delay);
}

CMatrix DemixState::effective_demixer(std::size_t f) const {
  const auto m = static_cast<Eigen::Index>(channels);
  const auto k = static_cast<Eigen::Index>(sources);
  CMatrix w(m, m);
  w.topRows(k) = P[f].leftCols(m);
  if (m > k) {
    w.bottomLeftCorner(m - k, k) = J[f];
    w.bottomRightCorner(m - k, m - k) = -CMatrix::Identity(m - k, m - k);
  }
  return w;
}

bool DemixState::all_finite() const {
  for (const auto& p : P) {
    if (!p.allFinite()) return false;
  }
  for (const auto& j : J) {
    if (!j.allFinite()) return false;
  }
  return true;
}

bool DemixState::operator==(const DemixState& other) const {
  if (sources != other.sources || channels != other.channels || taps != other.taps ||
      delay != other.delay || P.size() != other.P.size() || J.size() != other.J.size()) {
    return false;
  }
  for (std::size_t f = 0; f < P.size(); ++f) {
    if (P[f] != other.P[f]) return false;
  }
  for (std::size_t f = 0; f < J.size(); ++f) {
    if (J[f] != other.J[f]) return false;
  }
  return true;
}

DemixState init_demix(int channels, int sources, int taps, std::size_t bins, int delay) {
  if (sources < 1) throw std::invalid_argument("init_demix: need at least one source");
  if (sources > channels) {
    throw std::invalid_argument("init_demix: more sources (" + std::to_string(sources) +
                                ") than channels (" + std::to_string(channels) + ")");
  }
  if (taps < 0) throw std::invalid_argument("init_demix: taps must be >= 0");
  DemixState s;
  s.sources = sources;
  s.channels = channels;
  s.taps = taps;
  s.delay = delay;
  CMatrix p = CMatrix::Zero(sources, channels * (taps + 1));
  p.leftCols(sources).setIdentity();
  s.P.assign(bins, p);
  if (channels > sources) s.J.assign(bins, CMatrix::Zero(channels - sources, sources));
  return s;
}

DemixState extend_taps(const DemixState& state, int taps, int delay) {
  if (state.taps != 0) throw std::invalid_argument("extend_taps: state already has taps");
  DemixState out = state;
  out.taps = taps;
  out.delay = delay;
  for (auto& p : out.P) {
    CMatrix grown = CMatrix::Zero(state.sources, state.channels * (taps + 1));
    grown.leftCols(state.channels) = p;
    p = std::move(grown);
  }
  return out;
}

SourceEstimates demix(const DemixState& state, const StackedObservation& xt) {
  if (xt.dim() != static_cast<std::size_t>(state.stacked_dim()) ||
      xt.bins() != state.bins()) {
    throw std::invalid_argument("demix: state and observation dimensions disagree");
  }
  SourceEstimates y;
  y.data = SpectralTensor(static_cast<std::size_t>(state.sources), xt.bins(), xt.frames());
  for_each_bin(xt.bins(), [&](std::size_t f) {
    y.data.bin(f).noalias() = state.P[f] * xt.data.bin(f);
  });
  return y;
}

SourceEstimates projection_back(const SourceEstimates& y, const SpectralTensor& x,
                                int ref_channel) {
  if (ref_channel < 0 || static_cast<std::size_t>(ref_channel) >= x.channels()) {
    throw std::invalid_argument("projection_back: reference channel out of range");
  }
  if (y.data.bins() != x.bins() || y.data.frames() != x.frames()) {
    throw std::invalid_argument("projection_back: shape mismatch");
  }
  SourceEstimates out = y;
  for_each_bin(x.bins(), [&](std::size_t f) {
    const auto ref = x.bin(f).row(ref_channel);
    CMatrix& yf = out.data.bin(f);
    for (Eigen::Index k = 0; k < yf.rows(); ++k) {
      const double energy = yf.row(k).squaredNorm();
      if (energy <= 0.0) continue;
      // dot() conjugates its first argument: sum_n conj(y) * x_ref.
      const cplx gain = yf.row(k).dot(ref) / energy;
      yf.row(k) *= gain;
    }
  });
  return out;
}

}  // namespace tiss
