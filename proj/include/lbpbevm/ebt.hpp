#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace lbpbevm {

using FeatureRows = std::vector<std::vector<double>>;
using ClassIndex = int;

/// Flat CART tree stored in preorder. Internal nodes route
/// `x[feature] <= threshold` to `left`.
class DecisionTree {
 public:
  struct Node {
    int feature = -1;  ///< -1 marks a leaf
    double threshold = 0.0;
    std::int32_t left = -1;
    std::int32_t right = -1;
    ClassIndex label = 0;
    std::vector<double> distribution;  ///< per-class proportions at a leaf

    bool is_leaf() const noexcept { return feature < 0; }
    bool operator==(const Node&) const = default;
  };

  struct Prediction {
    ClassIndex label;
    std::span<const double> distribution;
  };

  DecisionTree() = default;
  DecisionTree(std::vector<Node> nodes, std::size_t dimension, std::size_t class_count);

  /// Throws DimensionMismatch.
  Prediction predict(std::span<const double> f) const;

  const std::vector<Node>& nodes() const noexcept { return nodes_; }
  std::size_t dimension() const noexcept { return dimension_; }
  std::size_t class_count() const noexcept { return class_count_; }
  std::size_t split_count() const noexcept;
  std::size_t depth() const;

  bool operator==(const DecisionTree&) const = default;

 private:
  std::vector<Node> nodes_;
  std::size_t dimension_ = 0;
  std::size_t class_count_ = 0;
};

/// Greedy CART growth with Gini impurity and midpoint thresholds. Nodes are
/// expanded breadth-first until `max_splits` internal nodes exist or no
/// impure node can be split. Ties between candidate splits go to the lowest
/// feature index, then the lowest threshold. `class_count` 0 infers it from
/// the labels. Throws EmptyDataset or InconsistentDimensions.
DecisionTree train_tree(const FeatureRows& features, std::span<const ClassIndex> labels,
                        std::size_t max_splits, std::size_t class_count = 0);

/// Classifier-ready rows with class indices into `classes`.
struct FeatureDataset {
  FeatureRows rows;
  std::vector<ClassIndex> labels;
  std::vector<std::string> classes;
  std::string source;

  std::size_t size() const noexcept { return rows.size(); }
  std::size_t dimension() const noexcept { return rows.empty() ? 0 : rows.front().size(); }
};

struct EbtParams {
  std::size_t learners = 30;
  std::size_t max_splits = 42000;
  std::uint64_t seed = 0;
  /// false trains every tree on the full dataset; with one learner this is
  /// a plain decision tree.
  bool bootstrap = true;

  bool operator==(const EbtParams&) const = default;
};

struct EbtModel {
  std::vector<DecisionTree> trees;
  std::vector<std::string> classes;
  EbtParams params;
  std::size_t dimension = 0;

  bool operator==(const EbtModel&) const = default;
};

/// Seed of the stream that draws tree `tree_index`'s bootstrap sample.
std::uint64_t child_seed(std::uint64_t seed, std::size_t tree_index) noexcept;

/// n draws with replacement from [0, n) for tree `tree_index`.
std::vector<std::size_t> bootstrap_indices(std::uint64_t seed, std::size_t tree_index,
                                           std::size_t n);

/// Bagged ensemble. `classes` names label indices; when empty, names "0".."C-1"
/// are generated. Throws EmptyDataset or InconsistentDimensions.
EbtModel train_ebt(const FeatureRows& features, std::span<const ClassIndex> labels,
                   const EbtParams& params, std::vector<std::string> classes = {});

/// Plurality vote. Ties go to the larger summed leaf distribution, then the
/// lowest class index.
ClassIndex ensemble_predict(const EbtModel& model, std::span<const double> f);

/// Fraction of samples classified correctly by the trees that did not see
/// them in their bootstrap. Samples in every bootstrap are skipped; 0 when
/// nothing is out of bag (including bootstrap = false).
double out_of_bag_accuracy(const EbtModel& model, const FeatureRows& features,
                           std::span<const ClassIndex> labels);

std::string serialize_model(const EbtModel& model);
/// Throws ParseError.
EbtModel deserialize_model(const std::string& text);

void save_model(const EbtModel& model, const std::string& path);
EbtModel load_model(const std::string& path);

}  // namespace lbpbevm
