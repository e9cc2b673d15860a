#include <random>

#include "doctest.h"
#include "lbpbevm/bevm.hpp"
#include "lbpbevm/error.hpp"
#include "oracles.hpp"

using namespace lbpbevm;

namespace {

Grid<double> grid3(std::vector<double> v) { return Grid<double>(3, 3, std::move(v)); }

PowerMatrix random_positive(std::mt19937_64& gen, std::size_t rows, std::size_t cols) {
  std::uniform_real_distribution<double> v(1.0, 500.0);
  PowerMatrix m(rows, cols);
  for (double& x : m.storage()) x = v(gen);
  return m;
}

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace

TEST_CASE("moment kernels are 1-based index ramps") {
  const MomentKernels k(5);
  for (std::size_t u = 0; u < 5; ++u)
    for (std::size_t v = 0; v < 5; ++v) {
      CHECK(k.b_icent()(u, v) == static_cast<double>(u + 1));
      CHECK(k.b_jcent()(u, v) == static_cast<double>(v + 1));
    }
  CHECK_THROWS_AS(MomentKernels(4), Error);
  CHECK_THROWS_AS(MomentKernels(1), Error);
  try {
    MomentKernels bad(8);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EvenKernel);
  }
}

TEST_CASE("centroid examples") {
  const Centroid flat = centroid(Grid<double>(5, 5, 2.0), MomentKernels(5));
  CHECK(flat.i_cent == doctest::Approx(3.0));
  CHECK(flat.j_cent == doctest::Approx(3.0));

  const Centroid point = centroid(grid3({0, 0, 6, 0, 0, 0, 0, 0, 0}), MomentKernels(3));
  CHECK(point.i_cent == 1.0);
  CHECK(point.j_cent == 3.0);

  // (1*3 + 2*3 + 3*12) / 18 = 45 / 18
  const Centroid heavy = centroid(grid3({1, 1, 1, 1, 1, 1, 4, 4, 4}), MomentKernels(3));
  CHECK(heavy.i_cent == doctest::Approx(2.5).epsilon(1e-15));
  CHECK(heavy.j_cent == doctest::Approx(2.0).epsilon(1e-15));

  try {
    centroid(Grid<double>(3, 3, 0.0), MomentKernels(3));
    FAIL("expected ZeroMassPatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ZeroMassPatch);
  }
  CHECK_THROWS_AS(centroid(Grid<double>(5, 5, 1.0), MomentKernels(3)), Error);
}

TEST_CASE("second-order moments of constant patches") {
  for (double c : {1.0, 0.25, 37.0}) {
    const MomentKernels k15(15);
    const Grid<double> p15(15, 15, c);
    const LocalCovariance m15 = second_order_moments(p15, centroid(p15, k15), k15);
    CHECK(rel(m15.i_var, 4200.0 * c) < 1e-12);
    CHECK(rel(m15.j_var, 4200.0 * c) < 1e-12);
    CHECK(std::abs(m15.cov_ij) < 1e-9 * c);

    const MomentKernels k5(5);
    const Grid<double> p5(5, 5, c);
    const LocalCovariance m5 = second_order_moments(p5, centroid(p5, k5), k5);
    CHECK(rel(m5.i_var, 50.0 * c) < 1e-12);
    CHECK(rel(m5.j_var, 50.0 * c) < 1e-12);
  }
  // Oracle cross-check of the closed form: sum_{u=1..15} (u-8)^2 = 280.
  long double col = 0;
  for (int u = 1; u <= 15; ++u) col += (u - 8) * (u - 8);
  CHECK(col == 280);
  CHECK(constant_region_evm(15) == 4200.0);
  CHECK(constant_region_evm(5) == 50.0);
}

TEST_CASE("point mass has zero spread") {
  const MomentKernels k(3);
  const Grid<double> p = grid3({0, 0, 0, 0, 0, 9, 0, 0, 0});
  const LocalCovariance m = second_order_moments(p, centroid(p, k), k);
  CHECK(m.i_var == 0.0);
  CHECK(m.j_var == 0.0);
  CHECK(m.cov_ij == 0.0);
}

TEST_CASE("principal eigenvalue") {
  CHECK(principal_eigenvalue({4200.0, 4200.0, 0.0}) == 4200.0);
  CHECK(principal_eigenvalue({2.0, 1.0, 0.0}) == 2.0);
  CHECK(principal_eigenvalue({2.0, 2.0, 1.0}) == doctest::Approx(3.0).epsilon(1e-15));
  CHECK(principal_eigenvalue({1.0, 5.0, 0.0}) == 5.0);
  // Characteristic polynomial oracle on random symmetric matrices.
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> v(-50.0, 50.0);
  for (int t = 0; t < 500; ++t) {
    const LocalCovariance c{v(gen), v(gen), v(gen)};
    const double ref = static_cast<double>(oracle::principal_root(c.i_var, c.cov_ij, c.j_var));
    CHECK(principal_eigenvalue(c) == doctest::Approx(ref).epsilon(1e-12).scale(100.0));
  }
}

TEST_CASE("evm_map on constant matrices") {
  for (std::size_t n : {3u, 5u, 7u, 15u}) {
    const PowerMatrix m(n + 6, n + 9, 12.5);
    const EvmMap e = evm_map(m, n);
    const std::size_t h = (n - 1) / 2;
    for (std::size_t i = 0; i < m.rows(); ++i)
      for (std::size_t j = 0; j < m.cols(); ++j) {
        const bool inside = i >= h && j >= h && i + h < m.rows() && j + h < m.cols();
        CHECK(e.valid(i, j) == inside);
        if (inside) CHECK(rel(e.values(i, j), constant_region_evm(n)) < 1e-9);
      }
  }
  CHECK_THROWS_AS(evm_map(PowerMatrix(14, 30, 1.0), 15), Error);
}

TEST_CASE("evm_map with one interior spike") {
  PowerMatrix m(40, 40, 10.0);
  m(20, 20) = 90.0;
  const std::size_t n = 15, h = 7;
  const EvmMap e = evm_map(m, n);
  std::vector<double> flat(m.flat().begin(), m.flat().end());
  const auto ref = oracle::from_rows(40, 40, flat);
  for (std::size_t i = h; i + h < 40; ++i)
    for (std::size_t j = h; j + h < 40; ++j) {
      const bool sees_spike = i + h >= 20 && i <= 20 + h && j + h >= 20 && j <= 20 + h;
      if (!sees_spike) {
        CHECK(rel(e.values(i, j), 4200.0) < 1e-9);
      } else {
        CHECK(rel(e.values(i, j), oracle::evm(ref, i, j, n)) < 1e-9);
      }
    }
  // A spike at the centre pulls the window mass inward relative to the centre value.
  CHECK(e.values(20, 20) < 4200.0);
  CHECK(e.values(20, 14) > 4225.0);
}

TEST_CASE("degenerate centres and empty windows give EVM 0") {
  PowerMatrix m(9, 9, 5.0);
  m(4, 4) = 0.0;
  EvmMap e = evm_map(m, 3);
  CHECK(e.valid(4, 4));
  CHECK(e.values(4, 4) == 0.0);
  CHECK(e.values(4, 3) > 0.0);

  e = evm_map(PowerMatrix(7, 7, 0.0), 5);
  for (double v : e.values.flat()) CHECK(v == 0.0);
}

TEST_CASE("binarize") {
  EvmMap e{Grid<double>(3, 3, 0.0), Grid<std::uint8_t>(3, 3, 0), 3};
  e.valid_mask(1, 1) = 1;
  e.values(1, 1) = 4225.0;
  CHECK(binarize(e, 4225.0).bits(1, 1) == 1);
  e.values(1, 1) = 4224.999;
  CHECK(binarize(e, 4225.0).bits(1, 1) == 0);
  e.values(0, 0) = 99999.0;  // invalid samples never set
  CHECK(binarize(e, 4225.0).bits(0, 0) == 0);

  const BevmMap flat = binarize(evm_map(PowerMatrix(20, 20, 3.0), 15), 4225.0);
  for (auto b : flat.bits.flat()) CHECK(b == 0);
  CHECK(flat.threshold == 4225.0);
}

TEST_CASE("property: random positive matrices") {
  std::mt19937_64 gen(5);
  for (int t = 0; t < 20; ++t) {
    const std::size_t n = 3 + 2 * static_cast<std::size_t>(t % 4);
    const PowerMatrix m = random_positive(gen, n + 5 + t % 3, n + 4);
    const EvmMap e = evm_map(m, n);
    std::vector<double> flat(m.flat().begin(), m.flat().end());
    const auto ref = oracle::from_rows(m.rows(), m.cols(), flat);
    const MomentKernels k(n);
    const std::size_t h = (n - 1) / 2;
    for (std::size_t i = h; i + h < m.rows(); ++i)
      for (std::size_t j = h; j + h < m.cols(); ++j) {
        CHECK(rel(e.values(i, j), oracle::evm(ref, i, j, n)) < 1e-9);
        Grid<double> patch(n, n);
        for (std::size_t u = 0; u < n; ++u)
          for (std::size_t v = 0; v < n; ++v) patch(u, v) = m(i - h + u, j - h + v);
        const LocalCovariance c = second_order_moments(patch, centroid(patch, k), k);
        CHECK(c.cov_ij * c.cov_ij <= c.i_var * c.j_var * (1.0 + 1e-9));
        CHECK(principal_eigenvalue(c) >= 0.5 * (c.i_var + c.j_var));
        CHECK(e.values(i, j) >= 0.0);
      }

    // Transposition swaps the i and j roles without changing eigenvalues.
    const EvmMap et = evm_map(transpose(m), n);
    for (std::size_t i = h; i + h < m.rows(); ++i)
      for (std::size_t j = h; j + h < m.cols(); ++j)
        CHECK(rel(et.values(j, i), e.values(i, j)) < 1e-12);

    // Positive scaling cancels in PEV / centre.
    PowerMatrix scaled = m;
    for (double& x : scaled.storage()) x *= 1000.0;
    const EvmMap es = evm_map(scaled, n);
    for (std::size_t i = h; i + h < m.rows(); ++i)
      for (std::size_t j = h; j + h < m.cols(); ++j)
        CHECK(rel(es.values(i, j), e.values(i, j)) < 1e-12);
  }
}
