#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "tiss/frontend.hpp"
#include "tiss/source_model.hpp"
#include "tiss/types.hpp"

namespace tiss {

struct IssConfig {
  int sources = 2;
  int iterations = 15;
  int taps = 5;
  int delay = 3;
  // Iterations run with taps disabled (AuxIVA-ISS) before the dereverberation
  // block is switched on.
  int warmstart_iterations = 0;
  SourceModel model;
  std::optional<SourceModel> warmstart_model;
  // Relative diagonal loading of the background solve.
  double epsilon = 1e-3;
  int ref_channel = 0;
  bool track_cost = true;

  void validate(int channels) const;
};

// Input statistics for the background update, fixed for a given input:
// R_f = mean_n x_fn x_fn^H (M x M), Cbar_f = mean_n xbar_fn x_fn^H (ML x M).
struct CovariancePair {
  std::vector<CMatrix> R;
  std::vector<CMatrix> Cbar;
};

CovariancePair compute_covariances(const StackedObservation& xt);

// Background signals z_fn = J_f x_fn^(1:K) - x_fn^(K+1:M).
struct BackgroundEstimates {
  SpectralTensor data;  // (M-K) x F x N
};

BackgroundEstimates background(const DemixState& state, const StackedObservation& xt);

// Objective minimized by the sweeps:
//   (1/N) sum_kn phi(sum_f |y_kfn|^2) - 2 sum_f log|det W^_f|,
// where phi is the contrast of the source model (see frame_contrast) and W^_f
// the effective square demixer. Its majorizer at the current estimate is the
// weighted quadratic cost of surrogate_cost with weights(model, Y).
// Throws DegenerateStateError if any |det W^_f| < 1e-300.
double eval_cost(const DemixState& state, const StackedObservation& xt,
                 const SourceModel& model);

// Weighted quadratic cost with the supplied (fixed) weights:
//   (1/N) sum_kfn u_k,fn |p_kf^H x~_fn|^2 - 2 sum_f log|det W^_f|.
double surrogate_cost(const DemixState& state, const StackedObservation& xt,
                      const std::vector<WeightMask>& masks);

// sum_f log|det W^_f|.
double log_abs_det(const DemixState& state);

// Steering-row index classes within the full square system.
enum class SteeringKind { kSource, kBackground, kTap };
SteeringKind steering_kind(const DemixState& state, int l);

// Signal s_n = p_l^H x~_fn of steering row l at bin f, given the current
// estimates y_f of that bin.
CRowVector steering_signal(const DemixState& state, const StackedObservation& xt,
                           const CMatrix& y_f, std::size_t f, int l);

// Row p_l^H of length M(L+1) for steering row l at bin f.
CRowVector steering_row(const DemixState& state, std::size_t f, int l);

// Closed-form minimizer v (length K) of the weighted cost for the rank-1
// update P_f <- P_f - v p_l^H. `u_f` holds each source's weights at bin f
// (K x N). `own` is the index of the source updated by its own row, or -1.
// Components whose denominator vanishes are left at zero and counted in
// `skipped`.
CVector steering_vector(const CMatrix& y_f, const CRowVector& s, const RMatrix& u_f, int own,
                        std::size_t* skipped = nullptr);

struct SweepStats {
  std::size_t skipped_updates = 0;
};

// One pass of rank-1 updates l = 0..M(L+1)-1 over all bins: source rows
// (l < K), background rows [J_l -e_l 0] (K <= l < M), then tap unit vectors
// (l >= M). Weights are refreshed from the current estimates before each l.
SweepStats iss_sweep(DemixState& state, const StackedObservation& xt, const SourceModel& model);

// Solves ((W R + U Cbar) E1) J^H = (W R + U Cbar) E2 for every bin with
// regularized_solve. No-op when K == M.
void background_update(DemixState& state, const CovariancePair& cov, double epsilon);

struct SeparationResult {
  SourceEstimates estimates;  // after projection back
  DemixState state;
  std::vector<double> cost_trace;  // initial cost followed by one entry per iteration
  SweepStats stats;
  std::vector<std::string> warnings;
};

// Called after every outer iteration (sweep plus background update) with
// the iteration index (0-based) and the stacked observation in use.
using IterationCallback =
    std::function<void(int iteration, const DemixState& state, const StackedObservation& xt)>;

// Joint dereverberation and separation. Dispatches to the determined or
// overdetermined routine according to cfg.sources and the channel count.
SeparationResult separate(const SpectralTensor& x, const IssConfig& cfg,
                          const IterationCallback& on_iteration = {});

// Requires K == M.
SeparationResult separate_determined(const SpectralTensor& x, const IssConfig& cfg,
                                     const IterationCallback& on_iteration = {});

// Accepts K <= M; background updates only run when K < M.
SeparationResult separate_overdetermined(const SpectralTensor& x, const IssConfig& cfg,
                                         const IterationCallback& on_iteration = {});

// Plain AuxIVA-ISS sweep on an unstacked observation, W_f of size M x M.
SweepStats auxiva_iss_sweep(std::vector<CMatrix>& demixers, const SpectralTensor& x,
                            const SourceModel& model);

// Determined AuxIVA-ISS without the stacked representation.
SeparationResult auxiva_iss(const SpectralTensor& x, int iterations, const SourceModel& model,
                            int ref_channel, bool track_cost = true);

}  // namespace tiss
