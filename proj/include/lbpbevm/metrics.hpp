#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "lbpbevm/ebt.hpp"
#include "lbpbevm/grid.hpp"

namespace lbpbevm {

/// Cosine similarity. Throws DimensionMismatch or ZeroVector.
double ncc(std::span<const double> a, std::span<const double> b);

/// Pairwise ncc; symmetric with a unit diagonal. Throws BadConfig for fewer
/// than two vectors and ZeroVector naming the offending row.
Grid<double> ncc_matrix(const FeatureRows& vectors);

/// Rows are true classes, columns predicted classes.
struct ConfusionMatrix {
  Grid<std::size_t> counts;
  std::vector<std::string> classes;

  explicit ConfusionMatrix(std::vector<std::string> class_names = {});
  void add(ClassIndex truth, ClassIndex predicted);
  void merge(const ConfusionMatrix& other);
  std::size_t total() const noexcept;
};

struct EvalReport {
  double accuracy = 0.0;
  double macro_f1 = 0.0;
  std::vector<double> precision;
  std::vector<double> recall;
  std::vector<double> f1;
  ConfusionMatrix confusion;
  std::size_t fold_count = 1;
  std::string protocol = "holdout";

  std::string to_json() const;
  /// Aligned per-class table plus the confusion matrix, for terminals.
  std::string to_table() const;
};

/// Accuracy, per-class precision/recall/F1 and macro-F1 from a confusion
/// matrix. A class never predicted has precision 0; absent from the truth,
/// recall 0; F1 is 0 whenever precision + recall is 0.
EvalReport report_from_confusion(ConfusionMatrix confusion);

/// Throws EmptyTestSet, DimensionMismatch.
EvalReport evaluate(const EbtModel& model, const FeatureRows& test_features,
                    std::span<const ClassIndex> test_labels);

/// Stratified fold id in [0, k) per sample: each class is shuffled under
/// `seed` and dealt round-robin, continuing the rotation across classes.
/// Throws BadK (k < 2) or ClassTooSmall (a class with fewer than k samples).
std::vector<std::size_t> stratified_folds(std::span<const ClassIndex> labels,
                                          std::size_t class_count, std::size_t k,
                                          std::uint64_t seed);

/// Stratified k-fold evaluation; fold confusion matrices are summed before
/// the aggregate metrics are computed.
EvalReport kfold_evaluate(const FeatureDataset& dataset, std::size_t k, const EbtParams& params);

/// Numeric grid as CSV with an optional header row/column of names.
std::string grid_to_csv(const Grid<double>& grid, std::span<const std::string> names = {});
std::string confusion_to_csv(const ConfusionMatrix& confusion);

}  // namespace lbpbevm
