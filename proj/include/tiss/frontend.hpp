#pragma once

#include <cstddef>
#include <vector>

#include "tiss/stft.hpp"
#include "tiss/types.hpp"

namespace tiss {

// Current frames stacked on top of L delayed copies of the observation.
// Rows [0, M) hold x_fn; rows [M*l, M*(l+1)) for l = 1..L hold the frame
// n - delay - (l - 1), or zero when that index falls before the signal.
struct StackedObservation {
  SpectralTensor data;  // M(L+1) x F x N
  int channels = 0;
  int taps = 0;
  int delay = 1;

  std::size_t dim() const { return data.channels(); }
  std::size_t bins() const { return data.bins(); }
  std::size_t frames() const { return data.frames(); }
};

StackedObservation build_stacked(const SpectralTensor& x, int taps, int delay);
StackedObservation build_stacked(const MultichannelSpectrogram& x, int taps, int delay);

// Unified dereverberation/separation filter per frequency, P_f = [W_f U_f]
// of shape K x M(L+1), plus the background coupling J_f of shape (M-K) x K
// used when there are more channels than sources.
struct DemixState {
  int sources = 0;
  int channels = 0;
  int taps = 0;
  int delay = 1;
  std::vector<CMatrix> P;
  std::vector<CMatrix> J;

  std::size_t bins() const { return P.size(); }
  bool overdetermined() const { return channels > sources; }
  int stacked_dim() const { return channels * (taps + 1); }

  // Square M x M demixer [W_f; J_f -I] (or W_f when K == M).
  CMatrix effective_demixer(std::size_t f) const;

  bool all_finite() const;

  bool operator==(const DemixState& other) const;
};

// W_f = [I_K | 0], U_f = 0, J_f = 0 for all bins.
DemixState init_demix(int channels, int sources, int taps, std::size_t bins,
                      int delay = 1);

// Grows an L = 0 state to `taps` taps with a zero dereverberation block.
DemixState extend_taps(const DemixState& state, int taps, int delay);

struct SourceEstimates {
  SpectralTensor data;  // K x F x N
};

// y_kfn = p_kf^H x~_fn, i.e. Y_f = P_f X~_f.
SourceEstimates demix(const DemixState& state, const StackedObservation& xt);

// Rescales source k at bin f by the least-squares gain
// a_kf = sum_n x_ref,fn conj(y_kfn) / sum_n |y_kfn|^2. Bins where a source has
// zero energy keep unit gain.
SourceEstimates projection_back(const SourceEstimates& y, const SpectralTensor& x,
                                int ref_channel);

}  // namespace tiss
