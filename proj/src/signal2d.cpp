#include "lbpbevm/signal2d.hpp"

#include <cmath>

#include "lbpbevm/error.hpp"

namespace lbpbevm {

PowerSignal::PowerSignal(std::vector<double> samples, double sample_rate_hz,
                         std::optional<std::string> label)
    : samples_(std::move(samples)),
      sample_rate_hz_(sample_rate_hz),
      label_(std::move(label)) {
  if (samples_.empty()) throw Error(ErrorCode::EmptySignal, "signal has no samples");
  if (!(sample_rate_hz_ > 0.0) || !std::isfinite(sample_rate_hz_))
    throw Error(ErrorCode::BadConfig, "sample rate must be positive");
  for (std::size_t k = 0; k < samples_.size(); ++k) {
    if (!std::isfinite(samples_[k]))
      throw Error(ErrorCode::NonFiniteSample, "sample " + std::to_string(k));
  }
}

PowerSignal PowerSignal::scaled(double factor) const {
  std::vector<double> out(samples_);
  for (double& v : out) v *= factor;
  return PowerSignal(std::move(out), sample_rate_hz_, label_);
}

PowerMatrix reshape_to_matrix(const PowerSignal& signal, std::size_t width,
                              PadPolicy policy) {
  if (width < 3)
    throw Error(ErrorCode::WidthTooSmall,
                "width " + std::to_string(width) + " < 3");
  const auto& s = signal.samples();
  const std::size_t len = s.size();
  std::size_t rows = 0;
  if (policy == PadPolicy::Truncate) {
    rows = len / width;
    if (rows == 0)
      throw Error(ErrorCode::EmptyAfterTruncate,
                  "signal length " + std::to_string(len) + " < width " +
                      std::to_string(width));
  } else {
    rows = (len + width - 1) / width;
  }
  std::vector<double> data(rows * width);
  const std::size_t copied = std::min(len, data.size());
  std::copy_n(s.begin(), copied, data.begin());
  if (policy == PadPolicy::EdgeReplicate) {
    std::fill(data.begin() + copied, data.end(), s.back());
  }
  return PowerMatrix(rows, width, std::move(data));
}

std::size_t default_width(std::size_t length) {
  std::size_t w = static_cast<std::size_t>(std::sqrt(static_cast<double>(length)));
  while (w * w < length) ++w;
  while (w > 0 && (w - 1) * (w - 1) >= length) --w;
  return w;
}

std::vector<double> flatten(const PowerMatrix& m) {
  return {m.flat().begin(), m.flat().end()};
}

std::string to_string(PadPolicy policy) {
  switch (policy) {
    case PadPolicy::ZeroPad: return "zero";
    case PadPolicy::EdgeReplicate: return "edge";
    case PadPolicy::Truncate: return "truncate";
  }
  return "truncate";
}

PadPolicy parse_pad_policy(const std::string& text) {
  if (text == "zero") return PadPolicy::ZeroPad;
  if (text == "edge") return PadPolicy::EdgeReplicate;
  if (text == "truncate") return PadPolicy::Truncate;
  throw Error(ErrorCode::BadConfig, "unknown pad policy '" + text +
                                        "' (expected zero|edge|truncate)");
}

}  // namespace lbpbevm
