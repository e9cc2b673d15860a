#include "lbpbevm/features.hpp"

#include <algorithm>
#include <numeric>

#include "lbpbevm/error.hpp"

namespace lbpbevm {

namespace {

inline std::size_t bin_of(std::uint8_t code, bool uniform) {
  return uniform ? uniform_bin(code) : code;
}

}  // namespace

void ExtractionConfig::validate() const {
  const MomentKernels check(kernel);
  if (width != 0 && width < std::max<std::size_t>(3, kernel))
    throw Error(ErrorCode::WidthTooSmall,
                "width " + std::to_string(width) + " < max(3, kernel " +
                    std::to_string(kernel) + ")");
}

std::vector<double> FeatureVector::concatenated() const {
  std::vector<double> out;
  out.reserve(h_up.size() + h_down.size());
  out.insert(out.end(), h_up.begin(), h_up.end());
  out.insert(out.end(), h_down.begin(), h_down.end());
  return out;
}

double FeatureVector::mass() const {
  return std::accumulate(h_up.begin(), h_up.end(), 0.0) +
         std::accumulate(h_down.begin(), h_down.end(), 0.0);
}

std::pair<std::vector<double>, std::vector<double>> partition_histograms(
    const LbpMap& lbp, const BevmMap& bevm, bool uniform_lbp) {
  if (lbp.rows() != bevm.rows() || lbp.cols() != bevm.cols())
    throw Error(ErrorCode::DimensionMismatch,
                "LBP map " + std::to_string(lbp.rows()) + "x" +
                    std::to_string(lbp.cols()) + " vs BEVM " +
                    std::to_string(bevm.rows()) + "x" + std::to_string(bevm.cols()));
  const std::size_t bins = uniform_lbp ? kUniformLbpBins : kLbpBins;
  std::vector<double> up(bins, 0.0), down(bins, 0.0);
  for (std::size_t i = 0; i < lbp.rows(); ++i) {
    for (std::size_t j = 0; j < lbp.cols(); ++j) {
      if (!lbp.valid(i, j) || !bevm.valid(i, j)) continue;
      auto& hist = bevm.bits(i, j) ? up : down;
      hist[bin_of(lbp.codes(i, j), uniform_lbp)] += 1.0;
    }
  }
  return {std::move(up), std::move(down)};
}

std::vector<double> lbp_histogram(const LbpMap& lbp, bool uniform_lbp) {
  std::vector<double> hist(uniform_lbp ? kUniformLbpBins : kLbpBins, 0.0);
  for (std::size_t i = 0; i < lbp.rows(); ++i)
    for (std::size_t j = 0; j < lbp.cols(); ++j)
      if (lbp.valid(i, j)) hist[bin_of(lbp.codes(i, j), uniform_lbp)] += 1.0;
  return hist;
}

void l1_normalize(std::vector<double>& hist) {
  const double total = std::accumulate(hist.begin(), hist.end(), 0.0);
  if (total <= 0.0) return;
  for (double& v : hist) v /= total;
}

PowerMatrix prepare_matrix(const PowerSignal& signal, const ExtractionConfig& config) {
  config.validate();
  const PowerSignal* source = &signal;
  std::optional<PowerSignal> windowed;
  if (config.max_samples != 0 && signal.size() > config.max_samples) {
    windowed.emplace(std::vector<double>(signal.samples().begin(),
                                         signal.samples().begin() +
                                             static_cast<std::ptrdiff_t>(config.max_samples)),
                     signal.sample_rate_hz(), signal.label());
    source = &*windowed;
  }
  const std::size_t width =
      config.width != 0 ? config.width : std::max<std::size_t>(default_width(source->size()), 3);
  if (source->size() < width) {
    throw Error(ErrorCode::SignalTooShort,
                std::to_string(source->size()) + " samples cannot fill one row of width " +
                    std::to_string(width));
  }
  PowerMatrix m = reshape_to_matrix(*source, width, config.pad);
  const std::size_t need = config.descriptor == Descriptor::LbpBevm ? config.kernel : 3;
  if (m.rows() < need || m.cols() < need)
    throw Error(ErrorCode::SignalTooShort,
                std::to_string(source->size()) + " samples reshape to " +
                    std::to_string(m.rows()) + "x" + std::to_string(m.cols()) +
                    ", smaller than the " + std::to_string(need) + "x" +
                    std::to_string(need) + " window");
  return m;
}

FeatureVector extract_lbp_bevm(const PowerSignal& signal, const ExtractionConfig& config) {
  ExtractionConfig cfg = config;
  cfg.descriptor = Descriptor::LbpBevm;
  const PowerMatrix m = prepare_matrix(signal, cfg);
  const LbpMap lbp = lbp_map(m);
  const BevmMap bevm = binarize(evm_map(m, cfg.kernel), cfg.thre);
  auto [up, down] = partition_histograms(lbp, bevm, cfg.uniform_lbp);
  FeatureVector fv{std::move(up), std::move(down), cfg.normalization};
  if (cfg.normalization == Normalization::L1) {
    const double total = fv.mass();
    if (total > 0.0) {
      for (double& v : fv.h_up) v /= total;
      for (double& v : fv.h_down) v /= total;
    }
  }
  return fv;
}

std::vector<double> extract_features(const PowerSignal& signal,
                                     const ExtractionConfig& config) {
  if (config.descriptor == Descriptor::LbpBevm)
    return extract_lbp_bevm(signal, config).concatenated();
  std::vector<double> hist =
      lbp_histogram(lbp_map(prepare_matrix(signal, config)), config.uniform_lbp);
  if (config.normalization == Normalization::L1) l1_normalize(hist);
  return hist;
}

std::string to_string(Normalization n) {
  return n == Normalization::L1 ? "l1" : "counts";
}

Normalization parse_normalization(const std::string& text) {
  if (text == "l1") return Normalization::L1;
  if (text == "counts") return Normalization::Counts;
  throw Error(ErrorCode::BadConfig, "unknown normalization '" + text + "' (expected l1|counts)");
}

std::string to_string(Descriptor d) {
  return d == Descriptor::LbpBevm ? "lbp-bevm" : "lbp";
}

Descriptor parse_descriptor(const std::string& text) {
  if (text == "lbp-bevm") return Descriptor::LbpBevm;
  if (text == "lbp") return Descriptor::Lbp;
  throw Error(ErrorCode::BadConfig, "unknown descriptor '" + text + "' (expected lbp-bevm|lbp)");
}

}  // namespace lbpbevm
