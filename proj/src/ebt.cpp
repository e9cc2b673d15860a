#include "lbpbevm/ebt.hpp"

#include <algorithm>
#include <deque>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include "json.hpp"
#include "lbpbevm/error.hpp"
#include "lbpbevm/parallel.hpp"

namespace lbpbevm {

namespace {

using json = nlohmann::json;

std::size_t infer_class_count(std::span<const ClassIndex> labels) {
  ClassIndex top = 0;
  for (ClassIndex c : labels) {
    if (c < 0) throw Error(ErrorCode::InconsistentDimensions, "negative class label");
    top = std::max(top, c);
  }
  return static_cast<std::size_t>(top) + 1;
}

std::size_t check_training_set(const FeatureRows& features, std::span<const ClassIndex> labels) {
  if (features.empty()) throw Error(ErrorCode::EmptyDataset, "no training samples");
  if (labels.size() != features.size())
    throw Error(ErrorCode::InconsistentDimensions,
                std::to_string(features.size()) + " feature rows vs " +
                    std::to_string(labels.size()) + " labels");
  const std::size_t dim = features.front().size();
  for (std::size_t i = 0; i < features.size(); ++i) {
    if (features[i].size() != dim)
      throw Error(ErrorCode::InconsistentDimensions,
                  "row " + std::to_string(i) + " has " + std::to_string(features[i].size()) +
                      " features, expected " + std::to_string(dim));
  }
  return dim;
}

struct BuildNode {
  int feature = -1;
  double threshold = 0.0;
  std::int32_t left = -1;
  std::int32_t right = -1;
  std::vector<double> counts;
};

struct Segment {
  std::int32_t node;
  std::size_t begin;
  std::size_t end;
};

// CART over the samples `ids` (positions into `features`, repeats allowed).
// Every feature keeps its own presorted ordering of the local sample slots;
// a node owns the same [begin, end) range in each ordering, and splitting
// stable-partitions that range.
DecisionTree grow_tree(const FeatureRows& features, std::span<const ClassIndex> labels,
                       std::span<const std::size_t> ids, std::size_t max_splits,
                       std::size_t class_count) {
  const std::size_t n = ids.size();
  const std::size_t dim = features.front().size();

  std::vector<double> columns(dim * n);
  std::vector<ClassIndex> y(n);
  for (std::size_t s = 0; s < n; ++s) {
    const auto& row = features[ids[s]];
    for (std::size_t f = 0; f < dim; ++f) columns[f * n + s] = row[f];
    y[s] = labels[ids[s]];
  }
  const auto value = [&](std::size_t f, std::uint32_t s) { return columns[f * n + s]; };

  std::vector<std::uint32_t> order(dim * n);
  for (std::size_t f = 0; f < dim; ++f) {
    auto first = order.begin() + static_cast<std::ptrdiff_t>(f * n);
    std::iota(first, first + static_cast<std::ptrdiff_t>(n), 0u);
    std::stable_sort(first, first + static_cast<std::ptrdiff_t>(n),
                     [&](std::uint32_t a, std::uint32_t b) { return value(f, a) < value(f, b); });
  }

  std::vector<BuildNode> built;
  std::deque<Segment> frontier;
  const auto make_node = [&](std::size_t begin, std::size_t end) {
    BuildNode node;
    node.counts.assign(class_count, 0.0);
    for (std::size_t k = begin; k < end; ++k) node.counts[static_cast<std::size_t>(y[order[k]])] += 1.0;
    built.push_back(std::move(node));
    return static_cast<std::int32_t>(built.size() - 1);
  };
  frontier.push_back({make_node(0, n), 0, n});

  std::vector<double> left_counts(class_count);
  std::vector<std::uint8_t> goes_left(n);
  std::vector<std::uint32_t> scratch(n);
  std::size_t splits = 0;

  while (!frontier.empty()) {
    const Segment seg = frontier.front();
    frontier.pop_front();
    const std::size_t m = seg.end - seg.begin;
    const auto& counts = built[static_cast<std::size_t>(seg.node)].counts;
    const bool pure =
        std::count_if(counts.begin(), counts.end(), [](double c) { return c > 0.0; }) <= 1;
    if (pure || m < 2 || splits >= max_splits) continue;

    double total_sq = 0.0;
    for (double c : counts) total_sq += c * c;

    double best_impurity = std::numeric_limits<double>::infinity();
    int best_feature = -1;
    double best_threshold = 0.0;
    for (std::size_t f = 0; f < dim; ++f) {
      const std::uint32_t* ord = order.data() + f * n + seg.begin;
      if (value(f, ord[0]) == value(f, ord[m - 1])) continue;
      std::fill(left_counts.begin(), left_counts.end(), 0.0);
      double sq_left = 0.0;
      double sq_right = total_sq;
      for (std::size_t k = 0; k + 1 < m; ++k) {
        const auto c = static_cast<std::size_t>(y[ord[k]]);
        const double right_c = counts[c] - left_counts[c];
        sq_left += 2.0 * left_counts[c] + 1.0;
        sq_right -= 2.0 * right_c - 1.0;
        left_counts[c] += 1.0;
        const double lo = value(f, ord[k]);
        const double hi = value(f, ord[k + 1]);
        if (!(lo < hi)) continue;
        const double n_left = static_cast<double>(k + 1);
        const double n_right = static_cast<double>(m - k - 1);
        const double impurity = (n_left - sq_left / n_left) + (n_right - sq_right / n_right);
        if (impurity < best_impurity) {
          best_impurity = impurity;
          best_feature = static_cast<int>(f);
          double mid = lo + (hi - lo) / 2.0;
          if (!(mid < hi)) mid = lo;
          best_threshold = mid;
        }
      }
    }
    if (best_feature < 0) continue;

    const auto bf = static_cast<std::size_t>(best_feature);
    std::size_t n_left = 0;
    for (std::size_t k = seg.begin; k < seg.end; ++k) {
      const std::uint32_t s = order[bf * n + k];
      goes_left[s] = value(bf, s) <= best_threshold ? 1 : 0;
      n_left += goes_left[s];
    }
    for (std::size_t f = 0; f < dim; ++f) {
      std::uint32_t* ord = order.data() + f * n;
      std::size_t l = seg.begin, r = 0;
      for (std::size_t k = seg.begin; k < seg.end; ++k) {
        if (goes_left[ord[k]])
          ord[l++] = ord[k];
        else
          scratch[r++] = ord[k];
      }
      std::copy_n(scratch.begin(), r, ord + l);
    }

    ++splits;
    const std::size_t mid = seg.begin + n_left;
    const std::int32_t left = make_node(seg.begin, mid);
    const std::int32_t right = make_node(mid, seg.end);
    BuildNode& parent = built[static_cast<std::size_t>(seg.node)];
    parent.feature = best_feature;
    parent.threshold = best_threshold;
    parent.left = left;
    parent.right = right;
    frontier.push_back({left, seg.begin, mid});
    frontier.push_back({right, mid, seg.end});
  }

  // Renumber to preorder so trained and deserialised trees compare equal.
  std::vector<DecisionTree::Node> nodes;
  nodes.reserve(built.size());
  std::vector<std::pair<std::int32_t, std::int32_t>> stack{{0, -1}};  // (built id, parent slot)
  while (!stack.empty()) {
    auto [id, parent] = stack.back();
    stack.pop_back();
    const BuildNode& b = built[static_cast<std::size_t>(id)];
    const auto slot = static_cast<std::int32_t>(nodes.size());
    if (parent >= 0) {
      auto& p = nodes[static_cast<std::size_t>(parent)];
      (p.left < 0 ? p.left : p.right) = slot;
    }
    DecisionTree::Node node;
    node.feature = b.feature;
    node.threshold = b.threshold;
    if (b.feature < 0) {
      const double total = std::accumulate(b.counts.begin(), b.counts.end(), 0.0);
      node.distribution.resize(class_count);
      for (std::size_t c = 0; c < class_count; ++c) node.distribution[c] = b.counts[c] / total;
      node.label = static_cast<ClassIndex>(
          std::max_element(b.counts.begin(), b.counts.end()) - b.counts.begin());
    }
    nodes.push_back(std::move(node));
    if (b.feature >= 0) {
      stack.push_back({b.right, slot});
      stack.push_back({b.left, slot});
    }
  }
  return DecisionTree(std::move(nodes), dim, class_count);
}

std::uint64_t splitmix64(std::uint64_t z) noexcept {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

ClassIndex vote(std::span<const std::size_t> tally, std::span<const double> mass) {
  std::size_t best = 0;
  for (std::size_t c = 1; c < tally.size(); ++c) {
    if (tally[c] > tally[best] || (tally[c] == tally[best] && mass[c] > mass[best])) best = c;
  }
  return static_cast<ClassIndex>(best);
}

json node_to_json(const DecisionTree& tree, std::size_t id) {
  const auto& node = tree.nodes()[id];
  if (node.is_leaf()) return {{"label", node.label}, {"distribution", node.distribution}};
  return {{"feature", node.feature},
          {"threshold", node.threshold},
          {"left", node_to_json(tree, static_cast<std::size_t>(node.left))},
          {"right", node_to_json(tree, static_cast<std::size_t>(node.right))}};
}

void node_from_json(const json& j, std::vector<DecisionTree::Node>& out) {
  const std::size_t slot = out.size();
  out.emplace_back();
  if (j.contains("feature")) {
    out[slot].feature = j.at("feature").get<int>();
    out[slot].threshold = j.at("threshold").get<double>();
    out[slot].left = static_cast<std::int32_t>(out.size());
    node_from_json(j.at("left"), out);
    out[slot].right = static_cast<std::int32_t>(out.size());
    node_from_json(j.at("right"), out);
  } else {
    out[slot].label = j.at("label").get<ClassIndex>();
    out[slot].distribution = j.at("distribution").get<std::vector<double>>();
  }
}

constexpr int kModelVersion = 1;

}  // namespace

DecisionTree::DecisionTree(std::vector<Node> nodes, std::size_t dimension,
                           std::size_t class_count)
    : nodes_(std::move(nodes)), dimension_(dimension), class_count_(class_count) {}

DecisionTree::Prediction DecisionTree::predict(std::span<const double> f) const {
  if (f.size() != dimension_)
    throw Error(ErrorCode::DimensionMismatch, "feature vector has " + std::to_string(f.size()) +
                                                  " values, tree expects " +
                                                  std::to_string(dimension_));
  std::size_t id = 0;
  while (!nodes_[id].is_leaf()) {
    const Node& node = nodes_[id];
    id = static_cast<std::size_t>(
        f[static_cast<std::size_t>(node.feature)] <= node.threshold ? node.left : node.right);
  }
  return {nodes_[id].label, nodes_[id].distribution};
}

std::size_t DecisionTree::split_count() const noexcept {
  return static_cast<std::size_t>(
      std::count_if(nodes_.begin(), nodes_.end(), [](const Node& n) { return !n.is_leaf(); }));
}

std::size_t DecisionTree::depth() const {
  std::size_t deepest = 0;
  std::vector<std::pair<std::size_t, std::size_t>> stack{{0, 0}};
  while (!stack.empty()) {
    auto [id, d] = stack.back();
    stack.pop_back();
    deepest = std::max(deepest, d);
    const Node& node = nodes_[id];
    if (!node.is_leaf()) {
      stack.push_back({static_cast<std::size_t>(node.left), d + 1});
      stack.push_back({static_cast<std::size_t>(node.right), d + 1});
    }
  }
  return deepest;
}

DecisionTree train_tree(const FeatureRows& features, std::span<const ClassIndex> labels,
                        std::size_t max_splits, std::size_t class_count) {
  check_training_set(features, labels);
  const std::size_t inferred = infer_class_count(labels);
  if (class_count == 0) class_count = inferred;
  if (inferred > class_count)
    throw Error(ErrorCode::InconsistentDimensions, "label exceeds class count");
  std::vector<std::size_t> ids(features.size());
  std::iota(ids.begin(), ids.end(), 0);
  return grow_tree(features, labels, ids, max_splits, class_count);
}

std::uint64_t child_seed(std::uint64_t seed, std::size_t tree_index) noexcept {
  return splitmix64(splitmix64(seed) ^ static_cast<std::uint64_t>(tree_index));
}

std::vector<std::size_t> bootstrap_indices(std::uint64_t seed, std::size_t tree_index,
                                           std::size_t n) {
  std::mt19937_64 gen(child_seed(seed, tree_index));
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::vector<std::size_t> out(n);
  for (auto& i : out) i = pick(gen);
  return out;
}

EbtModel train_ebt(const FeatureRows& features, std::span<const ClassIndex> labels,
                   const EbtParams& params, std::vector<std::string> classes) {
  const std::size_t dim = check_training_set(features, labels);
  if (params.learners == 0) throw Error(ErrorCode::BadConfig, "learner count must be >= 1");
  std::size_t class_count = infer_class_count(labels);
  if (classes.empty()) {
    for (std::size_t c = 0; c < class_count; ++c) classes.push_back(std::to_string(c));
  } else if (classes.size() < class_count) {
    throw Error(ErrorCode::InconsistentDimensions, "label exceeds class table");
  }
  class_count = classes.size();

  EbtModel model;
  model.classes = std::move(classes);
  model.params = params;
  model.dimension = dim;
  model.trees.resize(params.learners);
  parallel_for(params.learners, [&](std::size_t t) {
    std::vector<std::size_t> ids(features.size());
    if (params.bootstrap)
      ids = bootstrap_indices(params.seed, t, features.size());
    else
      std::iota(ids.begin(), ids.end(), 0);
    model.trees[t] = grow_tree(features, labels, ids, params.max_splits, class_count);
  });
  return model;
}

ClassIndex ensemble_predict(const EbtModel& model, std::span<const double> f) {
  if (f.size() != model.dimension)
    throw Error(ErrorCode::DimensionMismatch, "feature vector has " + std::to_string(f.size()) +
                                                  " values, model expects " +
                                                  std::to_string(model.dimension));
  std::vector<std::size_t> tally(model.classes.size(), 0);
  std::vector<double> mass(model.classes.size(), 0.0);
  for (const auto& tree : model.trees) {
    const auto p = tree.predict(f);
    ++tally[static_cast<std::size_t>(p.label)];
    for (std::size_t c = 0; c < mass.size(); ++c) mass[c] += p.distribution[c];
  }
  return vote(tally, mass);
}

double out_of_bag_accuracy(const EbtModel& model, const FeatureRows& features,
                           std::span<const ClassIndex> labels) {
  check_training_set(features, labels);
  const std::size_t n = features.size();
  const std::size_t classes = model.classes.size();
  std::vector<std::size_t> tally(n * classes, 0);
  std::vector<double> mass(n * classes, 0.0);
  std::vector<std::uint8_t> in_bag(n);
  for (std::size_t t = 0; t < model.trees.size(); ++t) {
    std::fill(in_bag.begin(), in_bag.end(), 0);
    if (!model.params.bootstrap) break;
    for (std::size_t i : bootstrap_indices(model.params.seed, t, n)) in_bag[i] = 1;
    for (std::size_t i = 0; i < n; ++i) {
      if (in_bag[i]) continue;
      const auto p = model.trees[t].predict(features[i]);
      ++tally[i * classes + static_cast<std::size_t>(p.label)];
      for (std::size_t c = 0; c < classes; ++c) mass[i * classes + c] += p.distribution[c];
    }
  }
  std::size_t scored = 0, correct = 0;
  for (std::size_t i = 0; i < n; ++i) {
    std::span<const std::size_t> t(tally.data() + i * classes, classes);
    if (std::all_of(t.begin(), t.end(), [](std::size_t v) { return v == 0; })) continue;
    ++scored;
    if (vote(t, {mass.data() + i * classes, classes}) == labels[i]) ++correct;
  }
  return scored == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(scored);
}

std::string serialize_model(const EbtModel& model) {
  json trees = json::array();
  for (const auto& tree : model.trees) trees.push_back(node_to_json(tree, 0));
  const json doc = {{"format", "lbpbevm-ebt"},
                    {"version", kModelVersion},
                    {"seed", model.params.seed},
                    {"learners", model.params.learners},
                    {"max_splits", model.params.max_splits},
                    {"bootstrap", model.params.bootstrap},
                    {"dimension", model.dimension},
                    {"classes", model.classes},
                    {"trees", std::move(trees)}};
  return doc.dump(1) + "\n";
}

EbtModel deserialize_model(const std::string& text) {
  try {
    const json doc = json::parse(text);
    if (doc.at("format").get<std::string>() != "lbpbevm-ebt")
      throw Error(ErrorCode::ParseError, "not an EBT model document");
    if (doc.at("version").get<int>() != kModelVersion)
      throw Error(ErrorCode::ParseError,
                  "unsupported model version " + std::to_string(doc.at("version").get<int>()));
    EbtModel model;
    model.params.seed = doc.at("seed").get<std::uint64_t>();
    model.params.learners = doc.at("learners").get<std::size_t>();
    model.params.max_splits = doc.at("max_splits").get<std::size_t>();
    model.params.bootstrap = doc.at("bootstrap").get<bool>();
    model.dimension = doc.at("dimension").get<std::size_t>();
    model.classes = doc.at("classes").get<std::vector<std::string>>();
    for (const auto& t : doc.at("trees")) {
      std::vector<DecisionTree::Node> nodes;
      node_from_json(t, nodes);
      model.trees.emplace_back(std::move(nodes), model.dimension, model.classes.size());
    }
    return model;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("model document: ") + e.what());
  }
}

void save_model(const EbtModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
  out << serialize_model(model);
}

EbtModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot read " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return deserialize_model(buf.str());
}

}  // namespace lbpbevm
