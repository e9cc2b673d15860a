#include "lbpbevm/lbp.hpp"

#include <bit>
#include <string>

#include "lbpbevm/error.hpp"

namespace lbpbevm {

namespace {

inline std::uint8_t code_unchecked(const PowerMatrix& m, std::size_t i, std::size_t j) {
  const double c = m(i, j);
  unsigned code = 0;
  for (std::size_t k = 0; k < kLbpNeighbours.size(); ++k) {
    const auto [di, dj] = kLbpNeighbours[k];
    if (m(i + di, j + dj) >= c) code |= 1u << k;
  }
  return static_cast<std::uint8_t>(code);
}

std::array<std::uint8_t, 256> build_uniform_table() {
  std::array<std::uint8_t, 256> table{};
  std::uint8_t next = 0;
  for (unsigned c = 0; c < 256; ++c) {
    const auto code = static_cast<std::uint8_t>(c);
    table[c] = circular_transitions(code) <= 2 ? next++ : 58;
  }
  return table;
}

}  // namespace

int circular_transitions(std::uint8_t code) noexcept {
  const auto rotated = static_cast<std::uint8_t>((code >> 1) | (code << 7));
  return std::popcount(static_cast<unsigned>(code ^ rotated));
}

std::size_t uniform_bin(std::uint8_t code) noexcept {
  static const auto table = build_uniform_table();
  return table[code];
}

std::uint8_t lbp_code_at(const PowerMatrix& matrix, std::size_t i, std::size_t j) {
  if (i == 0 || j == 0 || i + 1 >= matrix.rows() || j + 1 >= matrix.cols())
    throw Error(ErrorCode::OutOfRange, "(" + std::to_string(i) + ", " +
                                           std::to_string(j) +
                                           ") lacks a full 3x3 neighbourhood");
  return code_unchecked(matrix, i, j);
}

LbpMap lbp_map(const PowerMatrix& matrix) {
  if (matrix.rows() < 3 || matrix.cols() < 3)
    throw Error(ErrorCode::MatrixTooSmall,
                std::to_string(matrix.rows()) + "x" + std::to_string(matrix.cols()) +
                    " matrix, LBP needs at least 3x3");
  LbpMap out{Grid<std::uint8_t>(matrix.rows(), matrix.cols()),
             Grid<std::uint8_t>(matrix.rows(), matrix.cols())};
  for (std::size_t i = 1; i + 1 < matrix.rows(); ++i) {
    for (std::size_t j = 1; j + 1 < matrix.cols(); ++j) {
      out.codes(i, j) = code_unchecked(matrix, i, j);
      out.valid_mask(i, j) = 1;
    }
  }
  return out;
}

}  // namespace lbpbevm
