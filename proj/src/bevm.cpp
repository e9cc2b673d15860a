#include "lbpbevm/bevm.hpp"

#include <cmath>
#include <string>

#include "lbpbevm/error.hpp"

namespace lbpbevm {

namespace {

// Both passes read the patch through `at(u, v)` with 0-based u, v so the
// public patch API and the map sweep share one arithmetic path.
template <typename At>
bool centroid_of(At&& at, std::size_t n, Centroid& out) {
  double mass = 0.0, si = 0.0, sj = 0.0;
  for (std::size_t u = 0; u < n; ++u) {
    for (std::size_t v = 0; v < n; ++v) {
      const double p = at(u, v);
      mass += p;
      si += static_cast<double>(u + 1) * p;
      sj += static_cast<double>(v + 1) * p;
    }
  }
  if (mass <= kDegenerateEpsilon) {
    const double mid = static_cast<double>(n + 1) / 2.0;
    out = {mid, mid};
    return false;
  }
  out = {si / mass, sj / mass};
  return true;
}

template <typename At>
LocalCovariance moments_of(At&& at, std::size_t n, Centroid c) {
  LocalCovariance cov;
  for (std::size_t u = 0; u < n; ++u) {
    const double du = static_cast<double>(u + 1) - c.i_cent;
    for (std::size_t v = 0; v < n; ++v) {
      const double dv = static_cast<double>(v + 1) - c.j_cent;
      const double p = at(u, v);
      cov.i_var += du * du * p;
      cov.j_var += dv * dv * p;
      cov.cov_ij += du * dv * p;
    }
  }
  return cov;
}

void check_patch(const Grid<double>& patch, const MomentKernels& kernels) {
  if (patch.rows() != kernels.n() || patch.cols() != kernels.n())
    throw Error(ErrorCode::DimensionMismatch,
                "patch " + std::to_string(patch.rows()) + "x" +
                    std::to_string(patch.cols()) + " vs kernel " +
                    std::to_string(kernels.n()));
}

}  // namespace

MomentKernels::MomentKernels(std::size_t n) : n_(n) {
  if (n % 2 == 0)
    throw Error(ErrorCode::EvenKernel, "kernel size " + std::to_string(n) + " is even");
  if (n < 3)
    throw Error(ErrorCode::BadKernel, "kernel size " + std::to_string(n) + " < 3");
  b_icent_ = Grid<double>(n, n);
  b_jcent_ = Grid<double>(n, n);
  for (std::size_t u = 0; u < n; ++u) {
    for (std::size_t v = 0; v < n; ++v) {
      b_icent_(u, v) = static_cast<double>(u + 1);
      b_jcent_(u, v) = static_cast<double>(v + 1);
    }
  }
}

double constant_region_evm(std::size_t n) noexcept {
  const double d = static_cast<double>(n);
  return d * (d * d * d - d) / 12.0;
}

Centroid centroid(const Grid<double>& patch, const MomentKernels& kernels) {
  check_patch(patch, kernels);
  Centroid c{};
  if (!centroid_of([&](std::size_t u, std::size_t v) { return patch(u, v); },
                   kernels.n(), c))
    throw Error(ErrorCode::ZeroMassPatch, "patch sum is zero");
  return c;
}

LocalCovariance second_order_moments(const Grid<double>& patch, Centroid c,
                                     const MomentKernels& kernels) {
  check_patch(patch, kernels);
  return moments_of([&](std::size_t u, std::size_t v) { return patch(u, v); },
                    kernels.n(), c);
}

double principal_eigenvalue(const LocalCovariance& cov) noexcept {
  const double mean = 0.5 * (cov.i_var + cov.j_var);
  const double half_diff = 0.5 * (cov.i_var - cov.j_var);
  return mean + std::hypot(half_diff, cov.cov_ij);
}

EvmMap evm_map(const PowerMatrix& matrix, std::size_t n) {
  const MomentKernels kernels(n);
  if (matrix.rows() < n || matrix.cols() < n)
    throw Error(ErrorCode::MatrixTooSmall,
                std::to_string(matrix.rows()) + "x" + std::to_string(matrix.cols()) +
                    " matrix cannot hold a " + std::to_string(n) + "x" +
                    std::to_string(n) + " window");
  const std::size_t h = kernels.half();
  EvmMap out{Grid<double>(matrix.rows(), matrix.cols()),
             Grid<std::uint8_t>(matrix.rows(), matrix.cols()), n};
  for (std::size_t i = h; i + h < matrix.rows(); ++i) {
    for (std::size_t j = h; j + h < matrix.cols(); ++j) {
      out.valid_mask(i, j) = 1;
      const double centre = matrix(i, j);
      if (centre <= kDegenerateEpsilon) continue;
      const auto at = [&](std::size_t u, std::size_t v) {
        return matrix(i - h + u, j - h + v);
      };
      Centroid c{};
      if (!centroid_of(at, n, c)) continue;
      out.values(i, j) = principal_eigenvalue(moments_of(at, n, c)) / centre;
    }
  }
  return out;
}

BevmMap binarize(const EvmMap& evm, double thre) {
  BevmMap out{Grid<std::uint8_t>(evm.rows(), evm.cols()), evm.valid_mask, thre};
  for (std::size_t i = 0; i < evm.rows(); ++i)
    for (std::size_t j = 0; j < evm.cols(); ++j)
      if (evm.valid(i, j) && evm.values(i, j) >= thre) out.bits(i, j) = 1;
  return out;
}

}  // namespace lbpbevm
