#pragma once

#include <cstdint>
#include <vector>

#include "epx/dataset.hpp"

namespace epx {

struct ForestConfig {
  int n_trees = 500;      // 150 during phalanx formation
  int mtry = 0;           // 0 = floor(sqrt(subset size)), min 1
  int min_node_size = 1;  // stop splitting at or below this in-bag count
  std::uint64_t seed = 0;
  int threads = 1;

  int resolve_mtry(int subset_size) const;
};

/// Binary split: x < threshold goes left. Leaves carry the in-bag class
/// counts (bootstrap multiplicities included); feature == -1 marks a leaf.
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  std::uint32_t n0 = 0;
  std::uint32_t n1 = 0;

  bool is_leaf() const { return feature < 0; }
  double p_active() const { return static_cast<double>(n1) / (n0 + n1); }
};

struct Tree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  double predict_row(const double* row) const;
};

/// Forest restricted to a variable subset. Fitting is a pure function of
/// (dataset, variable_subset, config): per-tree seeds are mix64(seed, tree),
/// so results do not depend on the thread count.
struct Forest {
  ForestConfig config;
  std::vector<int> variable_subset;  // dataset column indices, sorted
  std::vector<Tree> trees;
  std::vector<std::vector<std::uint16_t>> inbag;  // [tree][obs] bootstrap count
  double train_prevalence = 0.0;                  // M/N, OOB fallback
  int n_train_obs = 0;
};

Forest fit(const Dataset& dataset, const std::vector<int>& variable_subset, const ForestConfig& config);

/// OOB probability per training observation: mean leaf class-1 proportion
/// over the trees whose bootstrap missed it; never-OOB observations get the
/// training prevalence.
std::vector<double> oob_probabilities(const Forest& forest, const Dataset& dataset);

std::vector<double> predict_proba(const Forest& forest, const FeatureMatrix& features);

/// Per-variable-set fit result, cached across formation iterations.
struct EvalRecord {
  std::vector<int> variable_set;  // canonical sorted
  std::vector<double> oob_probs;
  double assessment = 0.0;  // ave_p(oob_probs, labels)
};

/// Fits a forest on the subset, extracts OOB probabilities and scores them
/// with AveP. This is the sole evaluation pathway formation uses.
EvalRecord evaluate(const Dataset& dataset, const std::vector<int>& variable_set,
                    const ForestConfig& config);

}  // namespace epx
