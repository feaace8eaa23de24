#include "tiss/iss.hpp"

#include <atomic>
#include <cmath>
#include <stdexcept>
#include <string>

#include "tiss/parallel.hpp"
#include "tiss/solve.hpp"

namespace tiss {

namespace {

constexpr double kMinAbsDet = 1e-300;

RMatrix bin_weights(const std::vector<WeightMask>& masks, std::size_t f) {
  const auto k = static_cast<Eigen::Index>(masks.size());
  const Eigen::Index n = masks.empty() ? 0 : masks.front().u.cols();
  RMatrix u(k, n);
  for (Eigen::Index q = 0; q < k; ++q) {
    u.row(q) = masks[static_cast<std::size_t>(q)].u.row(static_cast<Eigen::Index>(f));
  }
  return u;
}

void check_dims(const DemixState& state, const StackedObservation& xt, const char* who) {
  if (xt.dim() != static_cast<std::size_t>(state.stacked_dim()) ||
      xt.bins() != state.bins() || xt.channels != state.channels) {
    throw std::invalid_argument(std::string(who) +
                                ": state and observation dimensions disagree");
  }
}

}  // namespace

void IssConfig::validate(int channels) const {
  if (iterations < 0) throw std::invalid_argument("iterations must be >= 0");
  if (warmstart_iterations < 0) throw std::invalid_argument("warmstart iterations must be >= 0");
  if (taps < 0) throw std::invalid_argument("taps must be >= 0");
  if (delay < 1) throw std::invalid_argument("delay must be >= 1");
  if (!(epsilon >= 0.0)) throw std::invalid_argument("epsilon must be >= 0");
  if (sources < 1 || sources > channels) {
    throw std::invalid_argument("need 1 <= sources <= channels (sources=" +
                                std::to_string(sources) +
                                ", channels=" + std::to_string(channels) + ")");
  }
  if (ref_channel < 0 || ref_channel >= channels) {
    throw std::invalid_argument("reference channel out of range");
  }
  model.validate();
  if (warmstart_model) warmstart_model->validate();
}

CovariancePair compute_covariances(const StackedObservation& xt) {
  const auto m = static_cast<Eigen::Index>(xt.channels);
  const auto ml = static_cast<Eigen::Index>(xt.dim()) - m;
  const double inv_n = 1.0 / static_cast<double>(xt.frames());
  CovariancePair cov;
  cov.R.resize(xt.bins());
  cov.Cbar.resize(xt.bins());
  for_each_bin(xt.bins(), [&](std::size_t f) {
    const CMatrix& xf = xt.data.bin(f);
    const auto cur = xf.topRows(m);
    cov.R[f] = inv_n * (cur * cur.adjoint());
    cov.Cbar[f] = inv_n * (xf.bottomRows(ml) * cur.adjoint());
  });
  return cov;
}

BackgroundEstimates background(const DemixState& state, const StackedObservation& xt) {
  check_dims(state, xt, "background");
  const auto k = static_cast<Eigen::Index>(state.sources);
  const auto m = static_cast<Eigen::Index>(state.channels);
  BackgroundEstimates z;
  z.data = SpectralTensor(static_cast<std::size_t>(m - k), xt.bins(), xt.frames());
  if (m == k) return z;
  for_each_bin(xt.bins(), [&](std::size_t f) {
    const CMatrix& xf = xt.data.bin(f);
    z.data.bin(f) = state.J[f] * xf.topRows(k) - xf.middleRows(k, m - k);
  });
  return z;
}

double log_abs_det(const DemixState& state) {
  std::vector<double> per_bin(state.bins());
  for_each_bin(state.bins(), [&](std::size_t f) {
    Eigen::PartialPivLU<CMatrix> lu(state.effective_demixer(f));
    double acc = 0.0;
    for (Eigen::Index i = 0; i < lu.matrixLU().rows(); ++i) {
      acc += std::log(std::abs(lu.matrixLU()(i, i)));
    }
    per_bin[f] = acc;
  });
  double total = 0.0;
  for (std::size_t f = 0; f < per_bin.size(); ++f) {
    if (!(per_bin[f] >= std::log(kMinAbsDet))) {
      throw DegenerateStateError("singular demixing matrix at bin " + std::to_string(f));
    }
    total += per_bin[f];
  }
  return total;
}

double eval_cost(const DemixState& state, const StackedObservation& xt,
                 const SourceModel& model) {
  check_dims(state, xt, "eval_cost");
  const SourceEstimates y = demix(state, xt);
  const auto k = static_cast<Eigen::Index>(state.sources);
  const auto n = static_cast<Eigen::Index>(xt.frames());
  RMatrix power = RMatrix::Zero(k, n);
  for (std::size_t f = 0; f < xt.bins(); ++f) power += y.data.bin(f).cwiseAbs2();
  double contrast = 0.0;
  for (Eigen::Index q = 0; q < k; ++q) {
    for (Eigen::Index t = 0; t < n; ++t) {
      contrast += frame_contrast(model, power(q, t), xt.bins());
    }
  }
  return contrast / static_cast<double>(n) - 2.0 * log_abs_det(state);
}

double surrogate_cost(const DemixState& state, const StackedObservation& xt,
                      const std::vector<WeightMask>& masks) {
  check_dims(state, xt, "surrogate_cost");
  if (masks.size() != static_cast<std::size_t>(state.sources)) {
    throw std::invalid_argument("surrogate_cost: need one weight mask per source");
  }
  const SourceEstimates y = demix(state, xt);
  double acc = 0.0;
  for (std::size_t f = 0; f < xt.bins(); ++f) {
    const RMatrix u = bin_weights(masks, f);
    acc += (u.array() * y.data.bin(f).cwiseAbs2().array()).sum();
  }
  return acc / static_cast<double>(xt.frames()) - 2.0 * log_abs_det(state);
}

SteeringKind steering_kind(const DemixState& state, int l) {
  if (l < 0 || l >= state.stacked_dim()) throw std::out_of_range("steering row out of range");
  if (l < state.sources) return SteeringKind::kSource;
  if (l < state.channels) return SteeringKind::kBackground;
  return SteeringKind::kTap;
}

CRowVector steering_signal(const DemixState& state, const StackedObservation& xt,
                           const CMatrix& y_f, std::size_t f, int l) {
  const CMatrix& xf = xt.data.bin(f);
  switch (steering_kind(state, l)) {
    case SteeringKind::kSource:
      return y_f.row(l);
    case SteeringKind::kBackground:
      return state.J[f].row(l - state.sources) * xf.topRows(state.sources) - xf.row(l);
    case SteeringKind::kTap:
      return xf.row(l);
  }
  return {};
}

CRowVector steering_row(const DemixState& state, std::size_t f, int l) {
  switch (steering_kind(state, l)) {
    case SteeringKind::kSource:
      return state.P[f].row(l);
    case SteeringKind::kBackground: {
      CRowVector p = CRowVector::Zero(state.stacked_dim());
      p.head(state.sources) = state.J[f].row(l - state.sources);
      p(l) = -1.0;
      return p;
    }
    case SteeringKind::kTap: {
      CRowVector p = CRowVector::Zero(state.stacked_dim());
      p(l) = 1.0;
      return p;
    }
  }
  return {};
}

CVector steering_vector(const CMatrix& y_f, const CRowVector& s, const RMatrix& u_f, int own,
                        std::size_t* skipped) {
  const Eigen::Index k = y_f.rows();
  const double n = static_cast<double>(y_f.cols());
  CVector v = CVector::Zero(k);
  const Eigen::ArrayXd s_pow = s.cwiseAbs2().transpose().array();
  const Eigen::ArrayXcd s_conj = s.conjugate().transpose().array();
  std::size_t miss = 0;
  for (Eigen::Index q = 0; q < k; ++q) {
    const Eigen::ArrayXd u = u_f.row(q).transpose().array();
    if (q == own) {
      const double scale = (u * y_f.row(q).cwiseAbs2().transpose().array()).sum() / n;
      if (scale > 0.0) {
        v(q) = 1.0 - 1.0 / std::sqrt(scale);
      } else {
        ++miss;
      }
    } else {
      const double den = (u * s_pow).sum();
      if (den > 0.0) {
        const cplx num = (y_f.row(q).transpose().array() * u.cast<cplx>() * s_conj).sum();
        v(q) = num / den;
      } else {
        ++miss;
      }
    }
  }
  if (skipped != nullptr) *skipped += miss;
  return v;
}

SweepStats iss_sweep(DemixState& state, const StackedObservation& xt, const SourceModel& model) {
  check_dims(state, xt, "iss_sweep");
  SourceEstimates y = demix(state, xt);
  std::atomic<std::size_t> skipped{0};
  for (int l = 0; l < state.stacked_dim(); ++l) {
    const auto masks = weights(model, y);
    const int own = l < state.sources ? l : -1;
    for_each_bin(xt.bins(), [&](std::size_t f) {
      CMatrix& yf = y.data.bin(f);
      const CRowVector s = steering_signal(state, xt, yf, f, l);
      const CRowVector p = steering_row(state, f, l);
      std::size_t miss = 0;
      const CVector v = steering_vector(yf, s, bin_weights(masks, f), own, &miss);
      state.P[f].noalias() -= v * p;
      yf.noalias() -= v * s;
      if (miss > 0) skipped += miss;
    });
  }
  return SweepStats{skipped.load()};
}

void background_update(DemixState& state, const CovariancePair& cov, double epsilon) {
  if (!state.overdetermined()) return;
  const auto k = static_cast<Eigen::Index>(state.sources);
  const auto m = static_cast<Eigen::Index>(state.channels);
  if (cov.R.size() != state.bins() || cov.Cbar.size() != state.bins()) {
    throw std::invalid_argument("background_update: covariance bin count mismatch");
  }
  for_each_bin(state.bins(), [&](std::size_t f) {
    const CMatrix& p = state.P[f];
    CMatrix a = p.leftCols(m) * cov.R[f];
    if (p.cols() > m) a.noalias() += p.rightCols(p.cols() - m) * cov.Cbar[f];
    try {
      const CMatrix jh = regularized_solve(a.leftCols(k), a.rightCols(m - k), epsilon);
      state.J[f] = jh.adjoint();
    } catch (const DegenerateStateError& e) {
      throw DegenerateStateError("background_update at bin " + std::to_string(f) + ": " +
                                 e.what());
    }
  });
}

namespace {

void run_phase(DemixState& state, const StackedObservation& xt, const SourceModel& model,
               int iterations, int first_index, bool background_enabled, double epsilon,
               bool track_cost, SeparationResult& result, const IterationCallback& cb) {
  std::optional<CovariancePair> cov;
  if (background_enabled && state.overdetermined()) cov = compute_covariances(xt);
  for (int it = 0; it < iterations; ++it) {
    const SweepStats s = iss_sweep(state, xt, model);
    result.stats.skipped_updates += s.skipped_updates;
    if (cov) background_update(state, *cov, epsilon);
    if (!state.all_finite()) {
      throw DegenerateStateError("iteration " + std::to_string(first_index + it) +
                                 ": non-finite demixing state");
    }
    if (track_cost) result.cost_trace.push_back(eval_cost(state, xt, model));
    if (cb) cb(first_index + it, state, xt);
  }
}

SeparationResult separate_impl(const SpectralTensor& x, const IssConfig& cfg,
                               const IterationCallback& cb, bool background_enabled) {
  const int m = static_cast<int>(x.channels());
  cfg.validate(m);
  if (!x.all_finite()) throw std::invalid_argument("separate: non-finite input spectrogram");

  SeparationResult result;
  const auto stacked_dim = static_cast<std::size_t>(m * (cfg.taps + 1));
  if (x.frames() <= stacked_dim) {
    result.warnings.push_back("only " + std::to_string(x.frames()) + " frames for " +
                              std::to_string(stacked_dim) +
                              " stacked channels; covariance estimates are rank deficient");
  }

  const StackedObservation xt = build_stacked(x, cfg.taps, cfg.delay);
  int done = 0;
  DemixState state;
  if (cfg.warmstart_iterations > 0) {
    const SourceModel warm_model = cfg.warmstart_model.value_or(cfg.model);
    const StackedObservation x0 = build_stacked(x, 0, cfg.delay);
    state = init_demix(m, cfg.sources, 0, x.bins(), cfg.delay);
    if (cfg.track_cost) result.cost_trace.push_back(eval_cost(state, x0, warm_model));
    run_phase(state, x0, warm_model, cfg.warmstart_iterations, 0, background_enabled,
              cfg.epsilon, cfg.track_cost, result, cb);
    done = cfg.warmstart_iterations;
    state = extend_taps(state, cfg.taps, cfg.delay);
  } else {
    state = init_demix(m, cfg.sources, cfg.taps, x.bins(), cfg.delay);
    if (cfg.track_cost) result.cost_trace.push_back(eval_cost(state, xt, cfg.model));
  }
  run_phase(state, xt, cfg.model, cfg.iterations, done, background_enabled, cfg.epsilon,
            cfg.track_cost, result, cb);

  if (result.stats.skipped_updates > 0) {
    result.warnings.push_back(std::to_string(result.stats.skipped_updates) +
                              " rank-1 updates skipped on zero-power bins");
  }
  result.estimates = projection_back(demix(state, xt), x, cfg.ref_channel);
  result.state = std::move(state);
  return result;
}

}  // namespace

SeparationResult separate(const SpectralTensor& x, const IssConfig& cfg,
                          const IterationCallback& on_iteration) {
  if (static_cast<std::size_t>(cfg.sources) == x.channels()) {
    return separate_determined(x, cfg, on_iteration);
  }
  return separate_overdetermined(x, cfg, on_iteration);
}

SeparationResult separate_determined(const SpectralTensor& x, const IssConfig& cfg,
                                     const IterationCallback& on_iteration) {
  if (static_cast<std::size_t>(cfg.sources) != x.channels()) {
    throw std::invalid_argument("separate_determined: sources must equal channels");
  }
  return separate_impl(x, cfg, on_iteration, /*background_enabled=*/false);
}

SeparationResult separate_overdetermined(const SpectralTensor& x, const IssConfig& cfg,
                                         const IterationCallback& on_iteration) {
  return separate_impl(x, cfg, on_iteration, /*background_enabled=*/true);
}

SweepStats auxiva_iss_sweep(std::vector<CMatrix>& demixers, const SpectralTensor& x,
                            const SourceModel& model) {
  const std::size_t nf = x.bins();
  if (demixers.size() != nf) throw std::invalid_argument("auxiva_iss_sweep: bin count mismatch");
  const auto m = static_cast<Eigen::Index>(x.channels());
  SourceEstimates y;
  y.data = SpectralTensor(x.channels(), nf, x.frames());
  for_each_bin(nf, [&](std::size_t f) {
    if (demixers[f].rows() != m || demixers[f].cols() != m) {
      throw std::invalid_argument("auxiva_iss_sweep: demixer must be M x M");
    }
    y.data.bin(f).noalias() = demixers[f] * x.bin(f);
  });
  std::atomic<std::size_t> skipped{0};
  for (Eigen::Index l = 0; l < m; ++l) {
    const auto masks = weights(model, y);
    for_each_bin(nf, [&](std::size_t f) {
      CMatrix& yf = y.data.bin(f);
      const CRowVector s = yf.row(l);
      const CRowVector p = demixers[f].row(l);
      std::size_t miss = 0;
      const CVector v = steering_vector(yf, s, bin_weights(masks, f), static_cast<int>(l), &miss);
      demixers[f].noalias() -= v * p;
      yf.noalias() -= v * s;
      if (miss > 0) skipped += miss;
    });
  }
  return SweepStats{skipped.load()};
}

SeparationResult auxiva_iss(const SpectralTensor& x, int iterations, const SourceModel& model,
                            int ref_channel, bool track_cost) {
  const int m = static_cast<int>(x.channels());
  if (iterations < 0) throw std::invalid_argument("iterations must be >= 0");
  SeparationResult result;
  result.state = init_demix(m, m, 0, x.bins());
  std::vector<CMatrix> w = result.state.P;
  const StackedObservation xt = build_stacked(x, 0, 1);
  auto snapshot = [&] {
    result.state.P = w;
    return eval_cost(result.state, xt, model);
  };
  if (track_cost) result.cost_trace.push_back(snapshot());
  for (int it = 0; it < iterations; ++it) {
    result.stats.skipped_updates += auxiva_iss_sweep(w, x, model).skipped_updates;
    if (track_cost) result.cost_trace.push_back(snapshot());
  }
  result.state.P = w;
  result.estimates = projection_back(demix(result.state, xt), x, ref_channel);
  return result;
}

}  // namespace tiss
