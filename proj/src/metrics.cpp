#include "lbpbevm/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <random>
#include <sstream>

#include "json.hpp"
#include "lbpbevm/error.hpp"
#include "lbpbevm/parallel.hpp"
#include "lbpbevm/text.hpp"

namespace lbpbevm {

double ncc(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size())
    throw Error(ErrorCode::DimensionMismatch,
                std::to_string(a.size()) + " vs " + std::to_string(b.size()) + " values");
  double dot = 0.0, aa = 0.0, bb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  if (aa == 0.0 || bb == 0.0) throw Error(ErrorCode::ZeroVector, "vector is all zero");
  return dot / (std::sqrt(aa) * std::sqrt(bb));
}

Grid<double> ncc_matrix(const FeatureRows& vectors) {
  if (vectors.size() < 2)
    throw Error(ErrorCode::BadConfig, "NCC matrix needs at least two vectors");
  for (std::size_t a = 0; a < vectors.size(); ++a) {
    if (std::all_of(vectors[a].begin(), vectors[a].end(), [](double v) { return v == 0.0; }))
      throw Error(ErrorCode::ZeroVector, "row " + std::to_string(a) + " is all zero");
  }
  const std::size_t n = vectors.size();
  Grid<double> out(n, n);
  for (std::size_t a = 0; a < n; ++a) {
    out(a, a) = 1.0;
    for (std::size_t b = a + 1; b < n; ++b) out(a, b) = out(b, a) = ncc(vectors[a], vectors[b]);
  }
  return out;
}

ConfusionMatrix::ConfusionMatrix(std::vector<std::string> class_names)
    : counts(class_names.size(), class_names.size(), 0), classes(std::move(class_names)) {}

void ConfusionMatrix::add(ClassIndex truth, ClassIndex predicted) {
  counts(static_cast<std::size_t>(truth), static_cast<std::size_t>(predicted)) += 1;
}

void ConfusionMatrix::merge(const ConfusionMatrix& other) {
  if (other.counts.rows() != counts.rows())
    throw Error(ErrorCode::DimensionMismatch, "confusion matrices differ in class count");
  for (std::size_t i = 0; i < counts.rows(); ++i)
    for (std::size_t j = 0; j < counts.cols(); ++j) counts(i, j) += other.counts(i, j);
}

std::size_t ConfusionMatrix::total() const noexcept {
  return std::accumulate(counts.flat().begin(), counts.flat().end(), std::size_t{0});
}

EvalReport report_from_confusion(ConfusionMatrix confusion) {
  const std::size_t c = confusion.classes.size();
  EvalReport r;
  r.precision.assign(c, 0.0);
  r.recall.assign(c, 0.0);
  r.f1.assign(c, 0.0);
  std::size_t diag = 0;
  for (std::size_t k = 0; k < c; ++k) {
    std::size_t predicted = 0, actual = 0;
    for (std::size_t o = 0; o < c; ++o) {
      predicted += confusion.counts(o, k);
      actual += confusion.counts(k, o);
    }
    const auto tp = static_cast<double>(confusion.counts(k, k));
    diag += confusion.counts(k, k);
    if (predicted > 0) r.precision[k] = tp / static_cast<double>(predicted);
    if (actual > 0) r.recall[k] = tp / static_cast<double>(actual);
    const double denom = r.precision[k] + r.recall[k];
    if (denom > 0.0) r.f1[k] = 2.0 * r.precision[k] * r.recall[k] / denom;
  }
  const std::size_t total = confusion.total();
  r.accuracy = total == 0 ? 0.0 : static_cast<double>(diag) / static_cast<double>(total);
  r.macro_f1 = c == 0 ? 0.0 : std::accumulate(r.f1.begin(), r.f1.end(), 0.0) / static_cast<double>(c);
  r.confusion = std::move(confusion);
  return r;
}

EvalReport evaluate(const EbtModel& model, const FeatureRows& test_features,
                    std::span<const ClassIndex> test_labels) {
  if (test_features.empty()) throw Error(ErrorCode::EmptyTestSet, "no test samples");
  if (test_labels.size() != test_features.size())
    throw Error(ErrorCode::DimensionMismatch, "test labels do not align with test rows");
  ConfusionMatrix confusion(model.classes);
  for (std::size_t i = 0; i < test_features.size(); ++i)
    confusion.add(test_labels[i], ensemble_predict(model, test_features[i]));
  return report_from_confusion(std::move(confusion));
}

std::vector<std::size_t> stratified_folds(std::span<const ClassIndex> labels,
                                          std::size_t class_count, std::size_t k,
                                          std::uint64_t seed) {
  if (k < 2) throw Error(ErrorCode::BadK, "k = " + std::to_string(k) + ", need k >= 2");
  std::vector<std::vector<std::size_t>> members(class_count);
  for (std::size_t i = 0; i < labels.size(); ++i)
    members[static_cast<std::size_t>(labels[i])].push_back(i);
  std::mt19937_64 gen(seed);
  std::vector<std::size_t> fold(labels.size(), 0);
  std::size_t rotation = 0;
  for (std::size_t c = 0; c < class_count; ++c) {
    auto& ids = members[c];
    if (ids.empty()) continue;
    if (ids.size() < k)
      throw Error(ErrorCode::ClassTooSmall, "class " + std::to_string(c) + " has " +
                                                std::to_string(ids.size()) + " samples, k = " +
                                                std::to_string(k));
    std::shuffle(ids.begin(), ids.end(), gen);
    for (std::size_t i : ids) fold[i] = rotation++ % k;
  }
  return fold;
}

EvalReport kfold_evaluate(const FeatureDataset& dataset, std::size_t k, const EbtParams& params) {
  if (dataset.rows.empty()) throw Error(ErrorCode::EmptyDataset, "no samples to evaluate");
  std::vector<std::size_t> fold =
      stratified_folds(dataset.labels, dataset.classes.size(), k, params.seed);
  std::vector<ConfusionMatrix> per_fold(k, ConfusionMatrix(dataset.classes));
  parallel_for(k, [&](std::size_t f) {
    FeatureRows train_rows;
    std::vector<ClassIndex> train_labels;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
      if (fold[i] == f) continue;
      train_rows.push_back(dataset.rows[i]);
      train_labels.push_back(dataset.labels[i]);
    }
    const EbtModel model = train_ebt(train_rows, train_labels, params, dataset.classes);
    for (std::size_t i = 0; i < dataset.size(); ++i) {
      if (fold[i] == f) per_fold[f].add(dataset.labels[i], ensemble_predict(model, dataset.rows[i]));
    }
  });
  ConfusionMatrix total(dataset.classes);
  for (const auto& cm : per_fold) total.merge(cm);
  EvalReport r = report_from_confusion(std::move(total));
  r.fold_count = k;
  r.protocol = "stratified " + std::to_string(k) + "-fold, seed " + std::to_string(params.seed);
  return r;
}

std::string EvalReport::to_json() const {
  nlohmann::json counts = nlohmann::json::array();
  for (std::size_t i = 0; i < confusion.counts.rows(); ++i) {
    auto row = confusion.counts.row(i);
    counts.push_back(std::vector<std::size_t>(row.begin(), row.end()));
  }
  const nlohmann::json doc = {{"accuracy", accuracy},
                              {"macro_f1", macro_f1},
                              {"classes", confusion.classes},
                              {"precision", precision},
                              {"recall", recall},
                              {"f1", f1},
                              {"confusion", counts},
                              {"fold_count", fold_count},
                              {"protocol", protocol},
                              {"samples", confusion.total()}};
  return doc.dump(2) + "\n";
}

std::string EvalReport::to_table() const {
  std::ostringstream out;
  std::size_t name_width = 5;
  for (const auto& c : confusion.classes) name_width = std::max(name_width, c.size());
  out << "protocol: " << protocol << "\n"
      << std::fixed << std::setprecision(4) << "accuracy: " << accuracy
      << "\nmacro-F1: " << macro_f1 << "\n\n"
      << std::left << std::setw(static_cast<int>(name_width)) << "class" << std::right
      << std::setw(11) << "precision" << std::setw(9) << "recall" << std::setw(9) << "F1"
      << std::setw(9) << "support" << "\n";
  for (std::size_t k = 0; k < confusion.classes.size(); ++k) {
    std::size_t support = 0;
    for (std::size_t o = 0; o < confusion.classes.size(); ++o) support += confusion.counts(k, o);
    out << std::left << std::setw(static_cast<int>(name_width)) << confusion.classes[k]
        << std::right << std::setw(11) << precision[k] << std::setw(9) << recall[k]
        << std::setw(9) << f1[k] << std::setw(9) << support << "\n";
  }
  out << "\nconfusion (rows = true, cols = predicted)\n";
  for (std::size_t i = 0; i < confusion.counts.rows(); ++i) {
    out << std::left << std::setw(static_cast<int>(name_width)) << confusion.classes[i]
        << std::right;
    for (std::size_t j = 0; j < confusion.counts.cols(); ++j)
      out << std::setw(6) << confusion.counts(i, j);
    out << "\n";
  }
  return out.str();
}

std::string grid_to_csv(const Grid<double>& grid, std::span<const std::string> names) {
  std::ostringstream out;
  const bool labelled = names.size() == grid.rows() && grid.rows() == grid.cols();
  if (labelled) {
    for (const auto& n : names) out << ',' << n;
    out << '\n';
  }
  for (std::size_t i = 0; i < grid.rows(); ++i) {
    if (labelled) out << names[i] << ',';
    for (std::size_t j = 0; j < grid.cols(); ++j) {
      if (j) out << ',';
      out << format_double(grid(i, j));
    }
    out << '\n';
  }
  return out.str();
}

std::string confusion_to_csv(const ConfusionMatrix& confusion) {
  std::ostringstream out;
  out << "true\\predicted";
  for (const auto& n : confusion.classes) out << ',' << n;
  out << '\n';
  for (std::size_t i = 0; i < confusion.counts.rows(); ++i) {
    out << confusion.classes[i];
    for (std::size_t j = 0; j < confusion.counts.cols(); ++j) out << ',' << confusion.counts(i, j);
    out << '\n';
  }
  return out.str();
}

}  // namespace lbpbevm
