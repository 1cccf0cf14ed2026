#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "epx/common.hpp"

namespace epx {

enum class VarKind { Binary, Continuous };

struct VariableMeta {
  std::string name;
  VarKind kind = VarKind::Continuous;
  int original_index = 0;  // column position in the source before drops
};

/// Row-major numeric matrix used for prediction inputs.
struct FeatureMatrix {
  int n_rows = 0;
  int n_cols = 0;
  std::vector<double> values;  // row-major

  double at(int row, int col) const { return values[static_cast<std::size_t>(row) * n_cols + col]; }
};

/// Two-class dataset: 0/1 labels (1 = rare/active class) plus a numeric
/// feature matrix with named binary/continuous columns. Immutable after
/// construction and safe to share across threads.
class Dataset {
 public:
  /// Validates invariants: both classes present, binary columns hold only
  /// {0,1}, no constant column, unique names. Throws DataError otherwise.
  Dataset(std::vector<int> labels, std::vector<double> column_major_values,
          std::vector<VariableMeta> columns);

  int n_obs() const { return n_obs_; }
  int n_vars() const { return static_cast<int>(columns_.size()); }
  int n_active() const { return n_active_; }
  double prevalence() const { return static_cast<double>(n_active_) / n_obs_; }

  const std::vector<int>& labels() const { return labels_; }
  const std::vector<VariableMeta>& columns() const { return columns_; }

  double at(int row, int col) const { return values_[static_cast<std::size_t>(col) * n_obs_ + row]; }
  std::span<const double> column(int col) const {
    return {values_.data() + static_cast<std::size_t>(col) * n_obs_, static_cast<std::size_t>(n_obs_)};
  }

  /// Copies the selected rows into a new Dataset. Constant-column and class
  /// checks are not reapplied: subsets keep the parent's column space so that
  /// variable indices stay aligned.
  Dataset subset_rows(const std::vector<int>& rows) const;

  FeatureMatrix to_feature_matrix() const;
  FeatureMatrix rows_to_feature_matrix(const std::vector<int>& rows) const;

  int column_index(const std::string& name) const;  // -1 when absent

 private:
  struct Unchecked {};
  Dataset(Unchecked, std::vector<int> labels, std::vector<double> values,
          std::vector<VariableMeta> columns);

  int n_obs_ = 0;
  int n_active_ = 0;
  std::vector<int> labels_;
  std::vector<double> values_;  // column-major
  std::vector<VariableMeta> columns_;
};

enum class GroupProvenance { Singletons, Names, Clusters, Explicit };

/// Ordered partition of variable indices into d disjoint non-empty groups.
struct GroupingPlan {
  std::vector<std::vector<int>> groups;
  GroupProvenance provenance = GroupProvenance::Explicit;

  int group_count() const { return static_cast<int>(groups.size()); }
  void validate(int n_vars) const;  // disjoint, non-empty, indices in range
};

struct LoadOptions {
  std::string label_column = "y";
  /// Optional sidecar CSV (columns: name,kind) pinning column kinds.
  /// Without hints a column whose values are all in {0,1} is binary.
  std::string kinds_path;
};

struct LoadReport {
  std::vector<std::string> dropped_constant_columns;
};

Dataset load_csv(const std::string& path, const LoadOptions& options, LoadReport* report = nullptr);

/// Writes data.csv (label column first) and, when kinds_path is non-empty,
/// a name,kind sidecar so a reload reproduces the dataset exactly.
void save_csv(const Dataset& dataset, const std::string& path, const std::string& label_column = "y",
              const std::string& kinds_path = "");

/// Groups columns whose names are identical after replacing every maximal
/// digit run with '#' (so AR_01_AR and AR_07_AR share a group). Groups are
/// ordered by first appearance.
GroupingPlan group_by_names(const Dataset& dataset);

GroupingPlan singleton_groups(const Dataset& dataset);

/// Name-based groups when any binary column exists, else singletons.
GroupingPlan default_grouping(const Dataset& dataset);

// --- Synthetic planted-signal data -----------------------------------------

/// Binary-feature generator with planted multiple-mechanism structure: each
/// informative block is enriched only among the actives assigned to that
/// block's mechanism.
struct SynthSpec {
  int n_obs = 400;
  double active_fraction = 0.05;
  int n_blocks = 2;           // informative variable blocks (mechanisms)
  int block_size = 5;         // variables per informative block
  int n_noise_groups = 8;     // name-groups of pure-noise variables
  int noise_group_size = 5;
  double effect_strength = 0.8;  // 0 = labels independent of features
  double background_rate = 0.1;  // P(bit = 1) off-mechanism
};

struct SynthDataset {
  Dataset dataset;
  std::vector<std::vector<int>> informative_blocks;  // ground-truth column sets
  std::vector<int> mechanism;  // per obs: block id for actives, -1 otherwise
};

SynthDataset synth_generate(const SynthSpec& spec, std::uint64_t seed);

// --- Grouping-plan file -----------------------------------------------------
// One line per group: comma-separated variable names; '#' starts a comment.

GroupingPlan read_grouping_file(const std::string& path, const Dataset& dataset);
void write_grouping_file(const std::string& path, const GroupingPlan& plan, const Dataset& dataset);

}  // namespace epx
