#include "tiss/source_model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace tiss {

void SourceModel::validate() const {
  if (!(floor > 0.0) || !std::isfinite(floor)) {
    throw std::invalid_argument("source model floor must be positive");
  }
}

SourceModel parse_source_model(const std::string& name, double floor) {
  SourceModel m;
  m.floor = floor;
  if (name == "gauss") {
    m.variant = SourceVariant::kGauss;
  } else if (name == "laplace") {
    m.variant = SourceVariant::kLaplace;
  } else if (name == "unit") {
    m.variant = SourceVariant::kUnit;
  } else {
    throw std::invalid_argument("unknown source model '" + name +
                                "' (expected gauss, laplace or unit)");
  }
  m.validate();
  return m;
}

std::string to_string(SourceVariant v) {
  switch (v) {
    case SourceVariant::kGauss:
      return "gauss";
    case SourceVariant::kLaplace:
      return "laplace";
    case SourceVariant::kUnit:
      return "unit";
  }
  return "unknown";
}

double frame_weight(const SourceModel& model, double frame_power, std::size_t num_bins) {
  switch (model.variant) {
    case SourceVariant::kGauss:
      return 1.0 / std::max(model.floor, frame_power / static_cast<double>(num_bins));
    case SourceVariant::kLaplace:
      return 1.0 / std::max(model.floor, 2.0 * std::sqrt(frame_power));
    case SourceVariant::kUnit:
      return 1.0;
  }
  return 1.0;
}

double frame_contrast(const SourceModel& model, double frame_power, std::size_t num_bins) {
  const double f = static_cast<double>(num_bins);
  const double s = frame_power;
  switch (model.variant) {
    case SourceVariant::kGauss: {
      // F log(s/F) + F above the floor, linear with slope 1/floor below.
      const double knee = f * model.floor;
      if (s <= knee) return s / model.floor;
      return f + f * std::log(s / knee);
    }
    case SourceVariant::kLaplace: {
      // sqrt(s) above the floor, linear with slope 1/floor below.
      const double knee = 0.25 * model.floor * model.floor;
      if (s <= knee) return s / model.floor;
      return std::sqrt(s) - 0.25 * model.floor;
    }
    case SourceVariant::kUnit:
      return s;
  }
  return s;
}

WeightMask weights(const SourceModel& model, const CMatrix& y_k) {
  model.validate();
  if (!y_k.allFinite()) throw std::invalid_argument("weights: non-finite source estimate");
  const auto num_bins = static_cast<std::size_t>(y_k.rows());
  WeightMask out;
  out.u.resize(y_k.rows(), y_k.cols());
  for (Eigen::Index n = 0; n < y_k.cols(); ++n) {
    const double power = y_k.col(n).squaredNorm();
    out.u.col(n).setConstant(frame_weight(model, power, num_bins));
  }
  return out;
}

std::vector<WeightMask> weights(const SourceModel& model, const SourceEstimates& y) {
  model.validate();
  const std::size_t nk = y.data.channels();
  const std::size_t nf = y.data.bins();
  const std::size_t nn = y.data.frames();
  RMatrix power = RMatrix::Zero(static_cast<Eigen::Index>(nk), static_cast<Eigen::Index>(nn));
  for (std::size_t f = 0; f < nf; ++f) {
    const CMatrix& yf = y.data.bin(f);
    if (!yf.allFinite()) throw std::invalid_argument("weights: non-finite source estimate");
    power += yf.cwiseAbs2();
  }
  std::vector<WeightMask> out(nk);
  for (std::size_t k = 0; k < nk; ++k) {
    out[k].u.resize(static_cast<Eigen::Index>(nf), static_cast<Eigen::Index>(nn));
    for (std::size_t n = 0; n < nn; ++n) {
      out[k].u.col(static_cast<Eigen::Index>(n))
          .setConstant(frame_weight(model, power(static_cast<Eigen::Index>(k),
                                                 static_cast<Eigen::Index>(n)),
                                    nf));
    }
  }
  return out;
}

}  // namespace tiss
