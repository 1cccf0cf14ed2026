#pragma once

#include <vector>

#include "epx/dataset.hpp"

namespace epx {

/// Symmetric dissimilarity matrix over D items, zero diagonal.
class DissimilarityMatrix {
 public:
  explicit DissimilarityMatrix(int size) : size_(size), values_(static_cast<std::size_t>(size) * size, 0.0) {}

  int size() const { return size_; }
  double at(int i, int j) const { return values_[static_cast<std::size_t>(i) * size_ + j]; }
  void set(int i, int j, double v) {
    values_[static_cast<std::size_t>(i) * size_ + j] = v;
    values_[static_cast<std::size_t>(j) * size_ + i] = v;
  }

 private:
  int size_;
  std::vector<double> values_;
};

/// 1 - |both 1| / |either 1| for two binary columns.
double jaccard_distance(std::span<const double> xi, std::span<const double> xj);

/// Pairwise Jaccard dissimilarities between the given binary columns of the
/// dataset; matrix indices follow the order of `binary_columns`.
DissimilarityMatrix jaccard_matrix(const Dataset& dataset, const std::vector<int>& binary_columns,
                                   int threads = 1);

enum class WardVariant {
  D,   // Lance-Williams Ward on the dissimilarities as given (legacy hclust "ward")
  D2,  // Ward on squared dissimilarities, heights reported on the original scale
};

/// One agglomeration: clusters `a` and `b` merge at `height`. Leaves are ids
/// 0..D-1; the merge at step s creates cluster id D+s (scipy convention).
struct MergeStep {
  int a = 0;
  int b = 0;
  double height = 0.0;
};

struct Dendrogram {
  int n_leaves = 0;
  std::vector<MergeStep> steps;  // n_leaves - 1 entries
};

/// Agglomerative Ward clustering via the Lance-Williams update. Tie merges
/// break to the lowest cluster-id pair.
Dendrogram ward_dendrogram(const DissimilarityMatrix& dist, WardVariant variant = WardVariant::D);

/// Replays the first D-k merges; groups are ordered by smallest member.
std::vector<std::vector<int>> cut_dendrogram(const Dendrogram& dendrogram, int k);

/// Clusters the matrix items into exactly k groups.
GroupingPlan ward_cluster(const DissimilarityMatrix& dist, int k, WardVariant variant = WardVariant::D);

/// Data-adaptive initial grouping: binary columns are Jaccard/Ward-clustered
/// into k groups, continuous columns are appended as singletons.
GroupingPlan cluster_groups(const Dataset& dataset, int k, WardVariant variant = WardVariant::D,
                            int threads = 1);

}  // namespace epx
