#include <gtest/gtest.h>

#include <cmath>

#include "test_util.hpp"
#include "tiss/simulate.hpp"
#include "tiss/wpe.hpp"

namespace tiss {
namespace {

using testing::random_tensor;

// Spectral-domain reverberation: x_fn = s_fn + sum_tau a_tau s_f,n-tau.
SpectralTensor reverberate(const SpectralTensor& s, std::size_t channels, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  SpectralTensor x(channels, s.bins(), s.frames());
  for (std::size_t f = 0; f < s.bins(); ++f) {
    for (std::size_t c = 0; c < channels; ++c) {
      const CMatrix taps = testing::random_cmatrix(1, 8, rng);
      const cplx direct = testing::random_cmatrix(1, 1, rng)(0, 0);
      for (std::size_t n = 0; n < s.frames(); ++n) {
        cplx acc = direct * s(0, f, n);
        for (std::size_t t = 1; t <= 8 && t <= n; ++t) {
          acc += 0.6 * std::exp(-0.3 * static_cast<double>(t)) * taps(0, static_cast<Eigen::Index>(t - 1)) * s(0, f, n - t);
        }
        x(c, f, n) = acc;
      }
    }
  }
  return x;
}

TEST(Wpe, NothingToPredictFrom) {
  const SpectralTensor x = random_tensor(2, 5, 3, 1);
  const WpeResult r = wpe_dereverb(x, WpeConfig{});
  EXPECT_EQ(r.output, x);
  for (const auto& z : r.filter.Z) EXPECT_EQ(z.norm(), 0.0);
}

TEST(Wpe, WhiteInputBarelyChanges) {
  const SpectralTensor x = random_tensor(2, 4, 2000, 2);
  const WpeResult r = wpe_dereverb(x, WpeConfig{});
  double diff = 0.0, energy = 0.0;
  for (std::size_t f = 0; f < 4; ++f) {
    diff += (r.output.bin(f) - x.bin(f)).squaredNorm();
    energy += x.bin(f).squaredNorm();
  }
  EXPECT_LE(diff / energy, 5e-2);
}

TEST(Wpe, ResidualIsOrthogonalToPast) {
  const SpectralTensor s = random_tensor(1, 4, 400, 3, true);
  const SpectralTensor x = reverberate(s, 2, 4);
  WpeConfig cfg;
  cfg.epsilon = 0.0;
  const WpeResult r = wpe_dereverb(x, cfg);
  const RMatrix u = wpe_weights(x, cfg.floor);
  const StackedObservation xt = build_stacked(x, cfg.taps, cfg.delay);
  for (std::size_t f = 0; f < 4; ++f) {
    const CMatrix past = xt.data.bin(f).bottomRows(2 * cfg.taps);
    const CMatrix& d = r.output.bin(f);
    const CMatrix g = d * u.row(static_cast<Eigen::Index>(f)).asDiagonal() * past.adjoint();
    const CMatrix scale = (d.cwiseAbs() * u.row(static_cast<Eigen::Index>(f)).asDiagonal()) * past.cwiseAbs().transpose();
    EXPECT_LE(g.norm() / scale.norm(), 1e-8);
  }
}

TEST(Wpe, ObjectiveNonIncreasingAndRemovesReverb) {
  const SpectralTensor s = random_tensor(1, 6, 600, 5, true);
  const SpectralTensor x = reverberate(s, 2, 6);
  WpeConfig cfg;
  cfg.iterations = 5;
  cfg.delay = 1;
  cfg.taps = 8;
  cfg.epsilon = 0.0;  // exact inner least squares
  const WpeResult r = wpe_dereverb(x, cfg);
  ASSERT_EQ(r.objective_trace.size(), 6u);
  for (std::size_t i = 1; i < r.objective_trace.size(); ++i) {
    EXPECT_LE(r.objective_trace[i] - r.objective_trace[i - 1], 1e-8 * std::abs(r.objective_trace[i - 1]));
  }
  EXPECT_LT(r.objective_trace.back(), r.objective_trace.front());
}

TEST(Wpe, ApplyFilterReproducesOutput) {
  const SpectralTensor x = reverberate(random_tensor(1, 3, 200, 7, true), 2, 8);
  const WpeResult r = wpe_dereverb(x, WpeConfig{});
  const SpectralTensor again = apply_wpe_filter(x, r.filter);
  for (std::size_t f = 0; f < 3; ++f) EXPECT_LT(testing::rel_diff(again.bin(f), r.output.bin(f)), 1e-12);
}

TEST(Wpe, Errors) {
  const SpectralTensor x = random_tensor(2, 3, 50, 1);
  WpeConfig bad;
  bad.taps = 0;
  EXPECT_THROW(wpe_dereverb(x, bad), std::invalid_argument);
  bad = WpeConfig{};
  bad.iterations = 0;
  EXPECT_THROW(wpe_dereverb(x, bad), std::invalid_argument);
  WpeFilter f;
  f.taps = 1;
  f.Z.assign(2, CMatrix::Zero(2, 2));
  EXPECT_THROW(apply_wpe_filter(x, f), std::invalid_argument);
}

}  // namespace
}  // namespace tiss
