#pragma once

#include <cstddef>
#include <cstdint>

#include "lbpbevm/signal2d.hpp"

namespace lbpbevm {

/// Square index kernels used for the local centroid and moments. Indices are
/// 1-based, so b_icent(u, v) = u + 1 and b_jcent(u, v) = v + 1 for 0-based
/// storage positions.
class MomentKernels {
 public:
  /// Throws EvenKernel for even n and BadKernel for n < 3.
  explicit MomentKernels(std::size_t n);

  std::size_t n() const noexcept { return n_; }
  std::size_t half() const noexcept { return (n_ - 1) / 2; }
  const Grid<double>& b_icent() const noexcept { return b_icent_; }
  const Grid<double>& b_jcent() const noexcept { return b_jcent_; }

 private:
  std::size_t n_;
  Grid<double> b_icent_;
  Grid<double> b_jcent_;
};

/// Closed-form second-order moment of a square patch with entries of unit
/// mass: n (n^3 - n) / 12. This is the EVM of any constant positive region.
double constant_region_evm(std::size_t n) noexcept;

struct Centroid {
  double i_cent;
  double j_cent;
};

struct LocalCovariance {
  double i_var = 0.0;
  double j_var = 0.0;
  double cov_ij = 0.0;
};

/// Patch sums at or below this are treated as empty, and centre values at or
/// below it normalise to an EVM of 0.
inline constexpr double kDegenerateEpsilon = 1e-12;

/// Power-weighted mean of the index kernels. Throws ZeroMassPatch when the
/// patch sum is <= kDegenerateEpsilon, DimensionMismatch on a patch/kernel
/// size mismatch.
Centroid centroid(const Grid<double>& patch, const MomentKernels& kernels);

LocalCovariance second_order_moments(const Grid<double>& patch, Centroid c,
                                     const MomentKernels& kernels);

/// Larger eigenvalue of [[i_var, cov_ij], [cov_ij, j_var]].
double principal_eigenvalue(const LocalCovariance& cov) noexcept;

/// Principal eigenvalue of each n x n neighbourhood divided by its centre
/// sample. Samples closer than (n-1)/2 to the border are invalid.
struct EvmMap {
  Grid<double> values;
  Grid<std::uint8_t> valid_mask;
  std::size_t kernel = 0;

  std::size_t rows() const noexcept { return values.rows(); }
  std::size_t cols() const noexcept { return values.cols(); }
  bool valid(std::size_t i, std::size_t j) const { return valid_mask(i, j) != 0; }
};

struct BevmMap {
  Grid<std::uint8_t> bits;
  Grid<std::uint8_t> valid_mask;
  double threshold = 0.0;

  std::size_t rows() const noexcept { return bits.rows(); }
  std::size_t cols() const noexcept { return bits.cols(); }
  bool valid(std::size_t i, std::size_t j) const { return valid_mask(i, j) != 0; }
};

/// Throws MatrixTooSmall if the matrix cannot hold one n x n window.
EvmMap evm_map(const PowerMatrix& matrix, std::size_t n);

/// bit = EVM >= thre on valid samples; invalid samples stay 0.
BevmMap binarize(const EvmMap& evm, double thre);

inline constexpr std::size_t kDefaultKernel = 15;
inline constexpr double kDefaultThreshold = 4225.0;

}  // namespace lbpbevm
