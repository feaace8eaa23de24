#include <gtest/gtest.h>

#include <cmath>

#include "json.hpp"
#include "tiss/simulate.hpp"

namespace tiss {
namespace {

SceneParams params(SceneKind kind, int k, int m, std::uint64_t seed) {
  SceneParams p;
  p.kind = kind;
  p.sources = k;
  p.channels = m;
  p.duration_s = 1.5;
  p.seed = seed;
  return p;
}

double additivity_residual(const MixtureScene& s) {
  const auto images = oracle_images(s);
  double err = 0.0, ref = 0.0;
  for (std::size_t m = 0; m < s.mixture.num_channels(); ++m) {
    for (std::size_t t = 0; t < s.mixture.num_samples(); ++t) {
      double acc = s.noise[m][t];
      for (const auto& img : images) acc += img.channels[m][t];
      err += std::pow(acc - s.mixture.channels[m][t], 2);
      ref += std::pow(s.mixture.channels[m][t], 2);
    }
  }
  return std::sqrt(err / ref);
}

TEST(Simulate, AnechoicSingleSourceIsDelayedCopy) {
  const MixtureScene s = make_scene(params(SceneKind::kAnechoic, 1, 2, 1));
  for (std::size_t m = 0; m < 2; ++m) {
    const auto& h = s.filters[m][0];
    const std::size_t d = h.size() - 1;
    for (std::size_t t = d; t < s.mixture.num_samples(); ++t) {
      EXPECT_DOUBLE_EQ(s.mixture.channels[m][t], h[d] * s.sources[0][t - d]);
    }
  }
  for (const auto& ch : s.noise) {
    for (double v : ch) EXPECT_EQ(v, 0.0);
  }
}

TEST(Simulate, ImagesAddUpToMixture) {
  for (SceneKind kind : {SceneKind::kInstantaneous, SceneKind::kAnechoic, SceneKind::kReverberant}) {
    SceneParams p = params(kind, 2, 3, 2);
    p.snr_db = 15.0;
    const MixtureScene s = make_scene(p);
    EXPECT_LE(additivity_residual(s), 1e-10) << to_string(kind);
  }
  const MixtureScene one = make_scene(params(SceneKind::kReverberant, 1, 2, 3));
  const auto img = oracle_images(one);
  for (std::size_t m = 0; m < 2; ++m) {
    for (std::size_t t = 0; t < one.mixture.num_samples(); t += 97) {
      EXPECT_NEAR(img[0].channels[m][t], one.mixture.channels[m][t], 1e-12);
    }
  }
}

TEST(Simulate, PartialImagesSplitFilters) {
  const MixtureScene s = make_scene(params(SceneKind::kReverberant, 2, 2, 4));
  const auto all = oracle_images(s);
  const auto early = partial_images(s, 0, 100);
  const auto late = partial_images(s, 100, std::numeric_limits<std::size_t>::max());
  for (std::size_t k = 0; k < 2; ++k) {
    for (std::size_t t = 0; t < s.mixture.num_samples(); t += 53) {
      EXPECT_NEAR(early[k].channels[1][t] + late[k].channels[1][t], all[k].channels[1][t], 1e-10);
    }
  }
}

TEST(Simulate, SnrIsExact) {
  for (NoiseKind noise : {NoiseKind::kWhite, NoiseKind::kDiffuse}) {
    SceneParams p = params(SceneKind::kAnechoic, 2, 4, 5);
    p.snr_db = 10.0;
    p.noise = noise;
    const MixtureScene s = make_scene(p);
    double sig = 0.0, nse = 0.0;
    for (std::size_t m = 0; m < 4; ++m) {
      for (std::size_t t = 0; t < s.mixture.num_samples(); ++t) {
        sig += std::pow(s.mixture.channels[m][t] - s.noise[m][t], 2);
        nse += std::pow(s.noise[m][t], 2);
      }
    }
    EXPECT_NEAR(10.0 * std::log10(sig / nse), 10.0, 0.1);
  }
}

TEST(Simulate, ReverberantTailEnergy) {
  SceneParams p = params(SceneKind::kReverberant, 1, 1, 6);
  p.direct_to_reverb_db = 3.0;
  p.rt_ms = 200.0;
  const MixtureScene s = make_scene(p);
  const auto& h = s.filters[0][0];
  std::size_t d = 0;
  while (h[d] == 0.0) ++d;
  double tail = 0.0;
  for (std::size_t t = d + 1; t < h.size(); ++t) tail += h[t] * h[t];
  EXPECT_NEAR(10.0 * std::log10(h[d] * h[d] / tail), 3.0, 1e-9);
  EXPECT_EQ(h.size() - d - 1, 3200u);
}

TEST(Simulate, DeterministicUnderSeed) {
  const MixtureScene a = make_scene(params(SceneKind::kReverberant, 2, 2, 7));
  const MixtureScene b = make_scene(params(SceneKind::kReverberant, 2, 2, 7));
  const MixtureScene c = make_scene(params(SceneKind::kReverberant, 2, 2, 8));
  EXPECT_EQ(a.mixture.channels, b.mixture.channels);
  EXPECT_EQ(a.filters, b.filters);
  EXPECT_NE(a.mixture.channels, c.mixture.channels);
}

TEST(Simulate, SourcesHaveUnitRms) {
  const MixtureScene s = make_scene(params(SceneKind::kAnechoic, 3, 3, 9));
  for (const auto& src : s.sources) {
    double e = 0.0;
    for (double v : src) e += v * v;
    EXPECT_NEAR(e / static_cast<double>(src.size()), 1.0, 1e-12);
  }
}

TEST(Simulate, ErrorsAndWarnings) {
  SceneParams p = params(SceneKind::kAnechoic, 2, 2, 1);
  p.duration_s = 0.5;
  EXPECT_THROW(make_scene(p), std::invalid_argument);
  EXPECT_THROW(parse_scene_kind("room"), std::invalid_argument);
  EXPECT_THROW(parse_noise_kind("pink"), std::invalid_argument);
  const MixtureScene s = make_scene(params(SceneKind::kAnechoic, 3, 2, 1));
  EXPECT_FALSE(s.warnings.empty());
}

TEST(Simulate, FirFilterMatchesDirectConvolution) {
  std::vector<double> x(500), h(300);
  for (std::size_t t = 0; t < x.size(); ++t) x[t] = std::sin(0.1 * static_cast<double>(t)) + 0.01 * static_cast<double>(t % 7);
  for (std::size_t t = 0; t < h.size(); ++t) h[t] = std::exp(-0.01 * static_cast<double>(t)) * std::cos(static_cast<double>(t));
  const auto y = fir_filter(x, h);
  for (std::size_t t = 0; t < x.size(); t += 11) {
    double acc = 0.0;
    for (std::size_t k = 0; k < h.size() && k <= t; ++k) acc += h[k] * x[t - k];
    EXPECT_NEAR(y[t], acc, 1e-10);
  }
}

TEST(Simulate, JsonSidecar) {
  SceneParams p = params(SceneKind::kReverberant, 2, 3, 42);
  const auto j = nlohmann::json::parse(scene_to_json(make_scene(p)));
  EXPECT_EQ(j["seed"], 42);
  EXPECT_EQ(j["kind"], "reverberant");
  EXPECT_TRUE(j["snr_db"].is_null());
  EXPECT_EQ(j["filter_lengths"].size(), 3u);
}

}  // namespace
}  // namespace tiss
