#pragma once

#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace tiss {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using CRowVector = Eigen::RowVectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;

// Raised when an optimization state stops being usable, e.g. a singular
// effective demixing matrix or a non-finite iterate.
class DegenerateStateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Complex tensor indexed (channel, frequency, frame), stored as one
// channels x frames matrix per frequency bin so that per-bin linear algebra
// works on contiguous Eigen blocks.
class SpectralTensor {
 public:
  SpectralTensor() = default;
  SpectralTensor(std::size_t channels, std::size_t bins, std::size_t frames)
      : channels_(channels), frames_(frames),
        bins_(bins, CMatrix::Zero(static_cast<Eigen::Index>(channels),
                                  static_cast<Eigen::Index>(frames))) {}

  std::size_t channels() const { return channels_; }
  std::size_t bins() const { return bins_.size(); }
  std::size_t frames() const { return frames_; }

  CMatrix& bin(std::size_t f) { return bins_[f]; }
  const CMatrix& bin(std::size_t f) const { return bins_[f]; }

  cplx& operator()(std::size_t c, std::size_t f, std::size_t n) {
    return bins_[f](static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(n));
  }
  cplx operator()(std::size_t c, std::size_t f, std::size_t n) const {
    return bins_[f](static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(n));
  }

  bool all_finite() const {
    for (const auto& b : bins_) {
      if (!b.allFinite()) return false;
    }
    return true;
  }

  bool operator==(const SpectralTensor& other) const {
    if (channels_ != other.channels_ || frames_ != other.frames_ ||
        bins_.size() != other.bins_.size()) {
      return false;
    }
    for (std::size_t f = 0; f < bins_.size(); ++f) {
      if (bins_[f] != other.bins_[f]) return false;
    }
    return true;
  }

 private:
  std::size_t channels_ = 0;
  std::size_t frames_ = 0;
  std::vector<CMatrix> bins_;
};

}  // namespace tiss
