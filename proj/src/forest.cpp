#include "epx/forest.hpp"

#include <algorithm>
#include <cmath>

#include "epx/metrics.hpp"
#include "epx/parallel.hpp"
#include "epx/rng.hpp"

namespace epx {

namespace {

constexpr double kMinGiniDecrease = 1e-12;

struct Split {
  double decrease = 0.0;
  int feature = -1;
  double threshold = 0.0;

  bool valid() const { return feature >= 0; }

  // Ties on the decrease break to the lowest variable index, then the
  // lowest threshold, so the choice is independent of candidate order.
  bool beats(const Split& other) const {
    if (!other.valid()) return true;
    if (decrease != other.decrease) return decrease > other.decrease;
    if (feature != other.feature) return feature < other.feature;
    return threshold < other.threshold;
  }
};

double gini(int n0, int n1) {
  const double n = n0 + n1;
  const double p1 = n1 / n;
  const double p0 = n0 / n;
  return 1.0 - p0 * p0 - p1 * p1;
}

class TreeBuilder {
 public:
  TreeBuilder(const Dataset& data, const std::vector<int>& subset, int mtry, int min_node_size,
              Rng& rng)
      : data_(data), subset_(subset), mtry_(mtry), min_node_size_(min_node_size), rng_(rng) {}

  Tree build(std::vector<int>& obs /* bootstrap indices, with duplicates */) {
    Tree tree;
    tree.nodes.emplace_back();
    // LIFO work stack; children pushed right-then-left so the left subtree
    // is grown first. Ranges index into obs_.
    obs_ = &obs;
    struct Item {
      int node;
      int begin;
      int end;
    };
    std::vector<Item> stack{{0, 0, static_cast<int>(obs.size())}};
    while (!stack.empty()) {
      const Item item = stack.back();
      stack.pop_back();
      grow(tree, item.node, item.begin, item.end, stack);
    }
    return tree;
  }

 private:
  template <typename StackT>
  void grow(Tree& tree, int node_id, int begin, int end, StackT& stack) {
    auto& obs = *obs_;
    int n1 = 0;
    for (int i = begin; i < end; ++i) n1 += data_.labels()[obs[i]];
    const int n = end - begin;
    const int n0 = n - n1;
    tree.nodes[node_id].n0 = static_cast<std::uint32_t>(n0);
    tree.nodes[node_id].n1 = static_cast<std::uint32_t>(n1);
    if (n1 == 0 || n0 == 0 || n <= min_node_size_) return;  // leaf

    const Split split = best_split(begin, end, n0, n1);
    if (!split.valid()) return;

    // Stable partition keeps the in-child order deterministic.
    scratch_.clear();
    int mid = begin;
    for (int i = begin; i < end; ++i) {
      if (data_.at(obs[i], split.feature) < split.threshold) {
        obs[mid++] = obs[i];
      } else {
        scratch_.push_back(obs[i]);
      }
    }
    std::copy(scratch_.begin(), scratch_.end(), obs.begin() + mid);

    const int left = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    tree.nodes.emplace_back();
    tree.nodes[node_id].feature = split.feature;
    tree.nodes[node_id].threshold = split.threshold;
    tree.nodes[node_id].left = left;
    tree.nodes[node_id].right = left + 1;
    stack.push_back({left + 1, mid, end});
    stack.push_back({left, begin, mid});
  }

  Split best_split(int begin, int end, int n0, int n1) {
    // Draw mtry candidate variables without replacement.
    candidates_ = subset_;
    const int m = std::min<int>(mtry_, static_cast<int>(candidates_.size()));
    for (int i = 0; i < m; ++i) {
      const int j = i + rng_.below_int(static_cast<int>(candidates_.size()) - i);
      std::swap(candidates_[i], candidates_[j]);
    }

    const auto& obs = *obs_;
    const double parent = gini(n0, n1);
    const int n = end - begin;
    Split best;
    for (int c = 0; c < m; ++c) {
      const int var = candidates_[c];
      sorted_.clear();
      for (int i = begin; i < end; ++i) {
        sorted_.push_back({data_.at(obs[i], var), data_.labels()[obs[i]]});
      }
      std::sort(sorted_.begin(), sorted_.end(),
                [](const auto& a, const auto& b) { return a.first < b.first; });
      int left0 = 0;
      int left1 = 0;
      for (int i = 0; i + 1 < n; ++i) {
        left0 += (sorted_[i].second == 0);
        left1 += (sorted_[i].second == 1);
        if (sorted_[i].first == sorted_[i + 1].first) continue;
        const int nl = i + 1;
        const int nr = n - nl;
        const double decrease = parent -
                                (static_cast<double>(nl) / n) * gini(left0, left1) -
                                (static_cast<double>(nr) / n) * gini(n0 - left0, n1 - left1);
        if (decrease <= kMinGiniDecrease) continue;
        Split cand{decrease, var, (sorted_[i].first + sorted_[i + 1].first) / 2.0};
        if (cand.beats(best)) best = cand;
      }
    }
    return best;
  }

  const Dataset& data_;
  const std::vector<int>& subset_;
  int mtry_;
  int min_node_size_;
  Rng& rng_;
  std::vector<int>* obs_ = nullptr;
  std::vector<int> candidates_;
  std::vector<int> scratch_;
  std::vector<std::pair<double, int>> sorted_;
};

}  // namespace

int ForestConfig::resolve_mtry(int subset_size) const {
  if (mtry > 0) return std::min(mtry, subset_size);
  return std::max(1, static_cast<int>(std::sqrt(static_cast<double>(subset_size))));
}

double Tree::predict_row(const double* row) const {
  int node = 0;
  while (!nodes[node].is_leaf()) {
    node = row[nodes[node].feature] < nodes[node].threshold ? nodes[node].left : nodes[node].right;
  }
  return nodes[node].p_active();
}

Forest fit(const Dataset& dataset, const std::vector<int>& variable_subset, const ForestConfig& config) {
  if (variable_subset.empty()) throw DataError("forest fit: empty variable subset");
  if (config.n_trees < 1) throw DataError("forest fit: need at least one tree");
  for (int v : variable_subset) {
    if (v < 0 || v >= dataset.n_vars()) throw DataError("forest fit: variable index out of range");
  }
  if (dataset.n_active() == 0 || dataset.n_active() == dataset.n_obs()) {
    throw DataError("forest fit: training data holds a single class");
  }

  Forest forest;
  forest.config = config;
  forest.variable_subset = variable_subset;
  std::sort(forest.variable_subset.begin(), forest.variable_subset.end());
  forest.n_train_obs = dataset.n_obs();
  forest.train_prevalence = dataset.prevalence();
  forest.trees.resize(config.n_trees);
  forest.inbag.resize(config.n_trees);

  const int n = dataset.n_obs();
  const int mtry = config.resolve_mtry(static_cast<int>(forest.variable_subset.size()));
  parallel_for(static_cast<std::size_t>(config.n_trees), config.threads, [&](std::size_t t) {
    Rng rng(mix64(config.seed, t));
    std::vector<int> bootstrap(n);
    auto& counts = forest.inbag[t];
    counts.assign(n, 0);
    for (int i = 0; i < n; ++i) {
      const int pick = rng.below_int(n);
      bootstrap[i] = pick;
      ++counts[pick];
    }
    TreeBuilder builder(dataset, forest.variable_subset, mtry, config.min_node_size, rng);
    forest.trees[t] = builder.build(bootstrap);
  });
  return forest;
}

std::vector<double> oob_probabilities(const Forest& forest, const Dataset& dataset) {
  if (dataset.n_obs() != forest.n_train_obs) {
    throw DataError("oob_probabilities: dataset does not match the fitted forest");
  }
  const int n = dataset.n_obs();
  std::vector<double> probs(n);
  std::vector<double> row(dataset.n_vars());
  for (int i = 0; i < n; ++i) {
    for (int v : forest.variable_subset) row[v] = dataset.at(i, v);
    double sum = 0;
    int votes = 0;
    for (std::size_t t = 0; t < forest.trees.size(); ++t) {
      if (forest.inbag[t][i] != 0) continue;
      sum += forest.trees[t].predict_row(row.data());
      ++votes;
    }
    probs[i] = votes > 0 ? sum / votes : forest.train_prevalence;
  }
  return probs;
}

std::vector<double> predict_proba(const Forest& forest, const FeatureMatrix& features) {
  if (!forest.variable_subset.empty() && features.n_cols <= forest.variable_subset.back()) {
    throw DataError("predict_proba: feature matrix narrower than the forest's variable space");
  }
  std::vector<double> probs(features.n_rows, 0.0);
  for (int r = 0; r < features.n_rows; ++r) {
    const double* row = features.values.data() + static_cast<std::size_t>(r) * features.n_cols;
    double sum = 0;
    for (const Tree& tree : forest.trees) sum += tree.predict_row(row);
    probs[r] = sum / static_cast<double>(forest.trees.size());
  }
  return probs;
}

EvalRecord evaluate(const Dataset& dataset, const std::vector<int>& variable_set,
                    const ForestConfig& config) {
  const Forest forest = fit(dataset, variable_set, config);
  EvalRecord record;
  record.variable_set = forest.variable_subset;
  record.oob_probs = oob_probabilities(forest, dataset);
  record.assessment = ave_p(record.oob_probs, dataset.labels());
  return record;
}

}  // namespace epx
