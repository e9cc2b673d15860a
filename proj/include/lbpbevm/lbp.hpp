#pragma once

#include <array>
#include <cstddef>
#include <cstdint>

#include "lbpbevm/signal2d.hpp"

namespace lbpbevm {

/// 8-neighbour LBP codes. Bit k is set when neighbour k >= centre; neighbours
/// are enumerated clockwise starting at the top-left corner:
///
///   0 1 2
///   7 c 3
///   6 5 4
///
/// The outer one-sample border has no full neighbourhood and is invalid.
struct LbpMap {
  Grid<std::uint8_t> codes;
  Grid<std::uint8_t> valid_mask;

  std::size_t rows() const noexcept { return codes.rows(); }
  std::size_t cols() const noexcept { return codes.cols(); }
  bool valid(std::size_t i, std::size_t j) const { return valid_mask(i, j) != 0; }
};

inline constexpr std::array<std::array<int, 2>, 8> kLbpNeighbours{{
    {-1, -1}, {-1, 0}, {-1, 1}, {0, 1}, {1, 1}, {1, 0}, {1, -1}, {0, -1}}};

/// Throws OutOfRange unless (i, j) is an interior sample.
std::uint8_t lbp_code_at(const PowerMatrix& matrix, std::size_t i, std::size_t j);

/// Throws MatrixTooSmall for matrices smaller than 3x3.
LbpMap lbp_map(const PowerMatrix& matrix);

inline constexpr std::size_t kLbpBins = 256;
inline constexpr std::size_t kUniformLbpBins = 59;

/// Uniform-pattern bin for a code: the 58 codes with at most two circular
/// 0/1 transitions get bins 0..57 in increasing code order, everything else
/// shares bin 58.
std::size_t uniform_bin(std::uint8_t code) noexcept;

/// Number of circular bit transitions in an 8-bit code.
int circular_transitions(std::uint8_t code) noexcept;

}  // namespace lbpbevm
