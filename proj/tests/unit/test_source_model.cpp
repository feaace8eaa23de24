#include <gtest/gtest.h>

#include <cmath>

#include "test_util.hpp"
#include "tiss/source_model.hpp"

namespace tiss {
namespace {

TEST(SourceModel, ParseNames) {
  EXPECT_EQ(parse_source_model("gauss").variant, SourceVariant::kGauss);
  EXPECT_EQ(parse_source_model("laplace").variant, SourceVariant::kLaplace);
  EXPECT_EQ(parse_source_model("unit").variant, SourceVariant::kUnit);
  EXPECT_THROW(parse_source_model("cauchy"), std::invalid_argument);
  EXPECT_THROW(parse_source_model("gauss", 0.0), std::invalid_argument);
  EXPECT_EQ(to_string(SourceVariant::kLaplace), "laplace");
}

TEST(SourceModel, UnitIsAllOnes) {
  const SpectralTensor y = testing::random_tensor(1, 5, 9, 1);
  const WeightMask u = weights(SourceModel{SourceVariant::kUnit, 1e-10}, y.bin(0));
  EXPECT_EQ(u.u, RMatrix::Ones(1, 9));
}

TEST(SourceModel, GaussMeanPowerFour) {
  CMatrix y = CMatrix::Constant(4, 3, cplx(2.0, 0.0));  // F = 4, |y|^2 = 4 everywhere
  const WeightMask u = weights(SourceModel{SourceVariant::kGauss, 1e-10}, y);
  for (Eigen::Index i = 0; i < u.u.size(); ++i) EXPECT_DOUBLE_EQ(u.u(i), 0.25);
}

TEST(SourceModel, LaplaceSilentFrameUsesFloor) {
  CMatrix y = CMatrix::Zero(3, 2);
  y(0, 1) = 3.0;
  const WeightMask u = weights(SourceModel{SourceVariant::kLaplace, 1e-6}, y);
  EXPECT_DOUBLE_EQ(u.u(0, 0), 1e6);
  EXPECT_DOUBLE_EQ(u.u(2, 1), 1.0 / 6.0);
}

TEST(SourceModel, ScaleCovariance) {
  const SpectralTensor y = testing::random_tensor(1, 6, 20, 2);
  const CMatrix yk = y.bin(0);
  const double c = 3.0;
  const auto g1 = weights(SourceModel{SourceVariant::kGauss, 1e-10}, yk);
  const auto g2 = weights(SourceModel{SourceVariant::kGauss, 1e-10}, CMatrix(c * yk));
  const auto l1 = weights(SourceModel{SourceVariant::kLaplace, 1e-10}, yk);
  const auto l2 = weights(SourceModel{SourceVariant::kLaplace, 1e-10}, CMatrix(c * yk));
  EXPECT_LT((g2.u - g1.u / (c * c)).norm(), 1e-12 * g1.u.norm());
  EXPECT_LT((l2.u - l1.u / c).norm(), 1e-12 * l1.u.norm());
}

TEST(SourceModel, FrameLocalAndPositive) {
  SpectralTensor y = testing::random_tensor(2, 4, 10, 3);
  const SourceModel m{SourceVariant::kLaplace, 1e-10};
  const auto before = weights(m, SourceEstimates{y});
  for (std::size_t f = 0; f < 4; ++f) y(1, f, 7) *= 5.0;
  const auto after = weights(m, SourceEstimates{y});
  for (Eigen::Index n = 0; n < 10; ++n) {
    EXPECT_EQ(before[0].u.col(n), after[0].u.col(n));
    if (n != 7) {
      EXPECT_EQ(before[1].u.col(n), after[1].u.col(n));
    } else {
      EXPECT_NE(before[1].u.col(n), after[1].u.col(n));
    }
  }
  for (const auto& w : after) EXPECT_GT(w.u.minCoeff(), 0.0);
}

TEST(SourceModel, TensorWeightsMatchPerSource) {
  const SpectralTensor y = testing::random_tensor(3, 5, 8, 4);
  const SourceModel m{SourceVariant::kGauss, 1e-10};
  const auto all = weights(m, SourceEstimates{y});
  for (std::size_t k = 0; k < 3; ++k) {
    CMatrix yk(5, 8);
    for (std::size_t f = 0; f < 5; ++f) yk.row(static_cast<Eigen::Index>(f)) = y.bin(f).row(static_cast<Eigen::Index>(k));
    EXPECT_LT((weights(m, yk).u - all[k].u).norm(), 1e-12 * all[k].u.norm());
  }
}

// The weight is the slope of the contrast, so the tangent line at s0 lies
// above the contrast everywhere (concavity) and touches it at s0.
TEST(SourceModel, ContrastTangentMajorizes) {
  for (auto variant : {SourceVariant::kGauss, SourceVariant::kLaplace, SourceVariant::kUnit}) {
    const SourceModel m{variant, 1e-3};
    for (double s0 : {1e-8, 1e-4, 0.3, 2.0, 50.0}) {
      const double w = frame_weight(m, s0, 4);
      const double h = 1e-7 * std::max(s0, 1e-3);
      const double slope = (frame_contrast(m, s0 + h, 4) - frame_contrast(m, s0 - std::min(h, s0), 4)) / (h + std::min(h, s0));
      EXPECT_NEAR(slope, w, 1e-4 * w) << to_string(variant) << " s0=" << s0;
      for (double s : {0.0, 1e-9, 1e-5, 0.01, 1.0, 10.0, 1e3}) {
        EXPECT_LE(frame_contrast(m, s, 4), frame_contrast(m, s0, 4) + w * (s - s0) + 1e-9 * (1.0 + s));
      }
    }
  }
}

}  // namespace
}  // namespace tiss
