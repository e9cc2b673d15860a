#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "lbpbevm/grid.hpp"

namespace lbpbevm {

/// A 1D power trace in watts.
class PowerSignal {
 public:
  /// Throws EmptySignal or NonFiniteSample.
  explicit PowerSignal(std::vector<double> samples, double sample_rate_hz = 1.0,
                       std::optional<std::string> label = std::nullopt);

  const std::vector<double>& samples() const noexcept { return samples_; }
  std::size_t size() const noexcept { return samples_.size(); }
  double sample_rate_hz() const noexcept { return sample_rate_hz_; }
  const std::optional<std::string>& label() const noexcept { return label_; }

  /// Copy with every sample multiplied by `factor`.
  PowerSignal scaled(double factor) const;

 private:
  std::vector<double> samples_;
  double sample_rate_hz_;
  std::optional<std::string> label_;
};

using PowerMatrix = Grid<double>;

enum class PadPolicy { ZeroPad, EdgeReplicate, Truncate };

/// Row-major reshape. ZeroPad/EdgeReplicate give ceil(L/width) rows,
/// Truncate gives floor(L/width) and drops the tail.
PowerMatrix reshape_to_matrix(const PowerSignal& signal, std::size_t width,
                              PadPolicy policy = PadPolicy::Truncate);

/// Near-square width for a trace of `length` samples: ceil(sqrt(length)).
std::size_t default_width(std::size_t length);

std::vector<double> flatten(const PowerMatrix& m);

std::string to_string(PadPolicy policy);
PadPolicy parse_pad_policy(const std::string& text);

}  // namespace lbpbevm
