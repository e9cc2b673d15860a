#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "lbpbevm/bevm.hpp"
#include "lbpbevm/lbp.hpp"
#include "lbpbevm/signal2d.hpp"

namespace lbpbevm {

enum class Normalization { Counts, L1 };

enum class Descriptor {
  LbpBevm,  ///< up/down histograms split by the BEVM bit
  Lbp,      ///< conventional LBP histogram over the whole interior
};

struct ExtractionConfig {
  std::size_t width = 0;  ///< 0 selects default_width(L)
  PadPolicy pad = PadPolicy::Truncate;
  std::size_t kernel = kDefaultKernel;
  double thre = kDefaultThreshold;
  Normalization normalization = Normalization::L1;
  bool uniform_lbp = false;
  Descriptor descriptor = Descriptor::LbpBevm;
  /// Only the leading max_samples samples are used; 0 disables windowing.
  std::size_t max_samples = std::size_t{1} << 20;

  /// Throws EvenKernel, BadKernel or WidthTooSmall.
  void validate() const;
  std::size_t bins_per_histogram() const noexcept {
    return uniform_lbp ? kUniformLbpBins : kLbpBins;
  }
  std::size_t dimension() const noexcept {
    return descriptor == Descriptor::LbpBevm ? 2 * bins_per_histogram()
                                             : bins_per_histogram();
  }
};

struct FeatureVector {
  std::vector<double> h_up;
  std::vector<double> h_down;
  Normalization normalization = Normalization::Counts;

  /// h_up followed by h_down.
  std::vector<double> concatenated() const;
  double mass() const;
};

/// Splits LBP codes of samples valid in both maps into the up (bit 1) and
/// down (bit 0) histograms. Returns raw counts. Throws DimensionMismatch.
std::pair<std::vector<double>, std::vector<double>> partition_histograms(
    const LbpMap& lbp, const BevmMap& bevm, bool uniform_lbp = false);

/// Conventional LBP histogram over every valid LBP sample.
std::vector<double> lbp_histogram(const LbpMap& lbp, bool uniform_lbp = false);

/// Scales `hist` to unit sum; an all-zero histogram is left untouched.
void l1_normalize(std::vector<double>& hist);

/// Reshape, LBP, EVM, binarize, partition, normalise. Throws SignalTooShort
/// when the reshaped matrix cannot hold one kernel window.
FeatureVector extract_lbp_bevm(const PowerSignal& signal, const ExtractionConfig& config);

/// The matrix the pipeline actually works on, after windowing and reshape.
PowerMatrix prepare_matrix(const PowerSignal& signal, const ExtractionConfig& config);

/// Classifier-ready row for the descriptor selected in `config`.
std::vector<double> extract_features(const PowerSignal& signal,
                                     const ExtractionConfig& config);

std::string to_string(Normalization n);
Normalization parse_normalization(const std::string& text);
std::string to_string(Descriptor d);
Descriptor parse_descriptor(const std::string& text);

}  // namespace lbpbevm
