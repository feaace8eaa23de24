#include "tiss/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include <unsupported/Eigen/FFT>

#include "json.hpp"

namespace tiss {

namespace {

constexpr std::size_t kMaxSources = 8;

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

double to_db(double num, double den, double cap) {
  if (num <= 0.0) return -cap;
  if (den <= 0.0) return cap;
  return std::clamp(10.0 * std::log10(num / den), -cap, cap);
}

// Cross-correlations c_xy(tau) = sum_t x(t) y(t + tau), evaluated through
// zero-padded FFTs of length nfft >= T + filter_length.
class Correlator {
 public:
  explicit Correlator(std::size_t nfft) : nfft_(nfft) {}

  std::vector<cplx> spectrum(const std::vector<double>& x) {
    std::vector<double> padded(nfft_, 0.0);
    std::copy(x.begin(), x.end(), padded.begin());
    std::vector<cplx> out;
    fft_.fwd(out, padded);
    return out;
  }

  // Returns c(tau) for tau in [-(len-1), len-1], index tau + len - 1.
  std::vector<double> correlate(const std::vector<cplx>& x, const std::vector<cplx>& y,
                                int len) {
    std::vector<cplx> prod(nfft_);
    for (std::size_t i = 0; i < nfft_; ++i) prod[i] = std::conj(x[i]) * y[i];
    std::vector<cplx> c;
    fft_.inv(c, prod);
    std::vector<double> out(static_cast<std::size_t>(2 * len - 1));
    for (int tau = -(len - 1); tau < len; ++tau) {
      const std::size_t idx = tau >= 0 ? static_cast<std::size_t>(tau)
                                       : nfft_ - static_cast<std::size_t>(-tau);
      out[static_cast<std::size_t>(tau + len - 1)] = c[idx].real();
    }
    return out;
  }

 private:
  std::size_t nfft_;
  Eigen::FFT<double> fft_;
};

void check_signals(const Signals& est, const Signals& ref) {
  if (est.empty() || ref.empty()) throw std::invalid_argument("evaluate: need at least one signal");
  if (est.size() != ref.size()) {
    throw std::invalid_argument("evaluate: estimate and reference counts differ");
  }
  if (ref.size() > kMaxSources) throw std::invalid_argument("evaluate: too many sources");
  const std::size_t len = ref.front().size();
  for (const auto& s : est) {
    if (s.size() != len) throw std::invalid_argument("evaluate: length mismatch");
  }
  for (const auto& s : ref) {
    if (s.size() != len) throw std::invalid_argument("evaluate: length mismatch");
  }
  if (len == 0) throw std::invalid_argument("evaluate: empty signals");
}

}  // namespace

PairScores score_pairs(const Signals& est, const Signals& ref, const EvalOptions& opts) {
  check_signals(est, ref);
  if (opts.filter_length < 1) throw std::invalid_argument("evaluate: filter_length must be >= 1");
  const int taps = opts.filter_length;
  const auto k = static_cast<Eigen::Index>(ref.size());
  const std::size_t len = ref.front().size();
  const Eigen::Index block = taps;

  Correlator corr(next_pow2(len + static_cast<std::size_t>(taps)));
  std::vector<std::vector<cplx>> ref_spec, est_spec;
  for (const auto& s : ref) ref_spec.push_back(corr.spectrum(s));
  for (const auto& s : est) est_spec.push_back(corr.spectrum(s));

  // Gram of all delayed references: G[(i,a),(j,b)] = c_ij(a - b).
  RMatrix gram(k * block, k * block);
  for (Eigen::Index i = 0; i < k; ++i) {
    for (Eigen::Index j = i; j < k; ++j) {
      const auto c = corr.correlate(ref_spec[static_cast<std::size_t>(i)],
                                    ref_spec[static_cast<std::size_t>(j)], taps);
      for (Eigen::Index a = 0; a < block; ++a) {
        for (Eigen::Index b = 0; b < block; ++b) {
          const double v = c[static_cast<std::size_t>(a - b + taps - 1)];
          gram(i * block + a, j * block + b) = v;
          gram(j * block + b, i * block + a) = v;
        }
      }
    }
  }
  const Eigen::LDLT<RMatrix> all_refs(gram);
  std::vector<Eigen::LDLT<RMatrix>> single_ref;
  for (Eigen::Index j = 0; j < k; ++j) {
    single_ref.emplace_back(gram.block(j * block, j * block, block, block));
  }

  PairScores out;
  out.sdr_db.resize(k, k);
  out.sir_db.resize(k, k);
  for (Eigen::Index i = 0; i < k; ++i) {
    const auto& e = est[static_cast<std::size_t>(i)];
    const double energy = std::inner_product(e.begin(), e.end(), e.begin(), 0.0);
    // D[(j,a)] = sum_t s_j(t - a) e(t) = c_{s_j, e}(a).
    RVector cross(k * block);
    for (Eigen::Index j = 0; j < k; ++j) {
      const auto c = corr.correlate(ref_spec[static_cast<std::size_t>(j)],
                                    est_spec[static_cast<std::size_t>(i)], taps);
      for (Eigen::Index a = 0; a < block; ++a) {
        cross(j * block + a) = c[static_cast<std::size_t>(a + taps - 1)];
      }
    }
    const RVector alpha = all_refs.solve(cross);
    const double proj_all = std::clamp(alpha.dot(cross), 0.0, energy);
    for (Eigen::Index j = 0; j < k; ++j) {
      const RVector d_j = cross.segment(j * block, block);
      const RVector beta = single_ref[static_cast<std::size_t>(j)].solve(d_j);
      const double target = std::clamp(beta.dot(d_j), 0.0, proj_all);
      const double interf = proj_all - target;
      const double distortion = energy - target;
      out.sir_db(i, j) = to_db(target, interf, opts.cap_db);
      out.sdr_db(i, j) = to_db(target, distortion, opts.cap_db);
    }
  }
  return out;
}

std::vector<int> permutation_align(const RMatrix& sir_db) {
  const auto k = static_cast<int>(sir_db.cols());
  if (sir_db.rows() != sir_db.cols()) throw std::invalid_argument("permutation_align: need square scores");
  if (static_cast<std::size_t>(k) > kMaxSources) {
    throw std::invalid_argument("permutation_align: too many sources");
  }
  std::vector<int> perm(static_cast<std::size_t>(k));
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<int> best = perm;
  double best_score = -std::numeric_limits<double>::infinity();
  do {
    double score = 0.0;
    for (int j = 0; j < k; ++j) score += sir_db(perm[static_cast<std::size_t>(j)], j);
    if (score > best_score) {
      best_score = score;
      best = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

std::vector<int> permutation_align(const Signals& est, const Signals& ref,
                                   const EvalOptions& opts) {
  return permutation_align(score_pairs(est, ref, opts).sir_db);
}

EvalReport evaluate(const Signals& est, const Signals& ref, const EvalOptions& opts) {
  const PairScores scores = score_pairs(est, ref, opts);
  EvalReport report;
  report.permutation = permutation_align(scores.sir_db);
  for (std::size_t j = 0; j < ref.size(); ++j) {
    const auto i = static_cast<Eigen::Index>(report.permutation[j]);
    report.sdr_db.push_back(scores.sdr_db(i, static_cast<Eigen::Index>(j)));
    report.sir_db.push_back(scores.sir_db(i, static_cast<Eigen::Index>(j)));
  }
  return report;
}

std::string report_to_json(const EvalReport& report) {
  nlohmann::ordered_json j;
  j["sdr_db"] = report.sdr_db;
  j["sir_db"] = report.sir_db;
  j["permutation"] = report.permutation;
  j["cost_trace"] = report.cost_trace;
  return j.dump(2) + "\n";
}

}  // namespace tiss
