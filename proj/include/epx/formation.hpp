#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "epx/dataset.hpp"
#include "epx/forest.hpp"
#include "epx/metrics.hpp"

namespace epx {

struct FormationConfig {
  double alpha = 0.95;       // screening quantile level
  int permutations = 1000;   // B, null-calibration repeats
  int formation_trees = 150; // trees per evaluator fit during formation
  std::uint64_t seed = 0;
  int threads = 1;
};

/// The base-classifier contract formation runs against: evaluate() performs
/// one (counted) fit of a variable set; ensemble_score() combines two fitted
/// records without fitting anything.
class Evaluator {
 public:
  virtual ~Evaluator() = default;

  /// Must be thread-safe and a pure function of the variable set.
  virtual EvalRecord evaluate(const std::vector<int>& variable_set) = 0;

  /// Assessment of the two-model ensemble built from the records' OOB
  /// probability vectors.
  virtual double ensemble_score(const EvalRecord& a, const EvalRecord& b) const = 0;
};

/// Forest-backed evaluator. Each variable set is fitted with a seed derived
/// from the set itself, so results are independent of evaluation order.
class ForestEvaluator : public Evaluator {
 public:
  ForestEvaluator(const Dataset& dataset, ForestConfig config, std::uint64_t seed)
      : dataset_(dataset), config_(config), seed_(seed) {}

  EvalRecord evaluate(const std::vector<int>& variable_set) override;
  double ensemble_score(const EvalRecord& a, const EvalRecord& b) const override;

 private:
  const Dataset& dataset_;
  ForestConfig config_;
  std::uint64_t seed_;
};

/// AveP of the probability-averaged two-model ensemble.
double ensemble_score(const EvalRecord& a, const EvalRecord& b, const std::vector<int>& labels);

/// Fit store keyed by canonical variable set. A key is fitted at most once;
/// fit_count() is the number of distinct sets evaluated.
class EvalCache {
 public:
  const EvalRecord& get_or_evaluate(const std::vector<int>& variable_set, Evaluator& evaluator);

  /// Evaluates all cache misses among `sets` (deduplicated) in parallel and
  /// inserts them in canonical order.
  void warm(const std::vector<std::vector<int>>& sets, Evaluator& evaluator, int threads);

  const EvalRecord* find(const std::vector<int>& variable_set) const;
  long fit_count() const { return fit_count_; }
  std::size_t size() const { return records_.size(); }

 private:
  std::map<std::vector<int>, EvalRecord> records_;
  long fit_count_ = 0;
};

struct GroupScreenResult {
  std::vector<int> group;
  double a_solo = 0.0;           // a_i
  bool pass_solo = false;        // a_i >= a_alpha
  bool pass_single_model = false;
  bool pass_ensemble = false;
  int witness_single = -1;       // partner j for the single-model test
  int witness_ensemble = -1;
  bool survived = false;
};

struct ScreeningReport {
  std::vector<GroupScreenResult> groups;
  std::vector<double> a_pair;           // d*d, union-model assessments (i!=j)
  std::vector<double> a_pair_ensemble;  // d*d, two-model ensemble assessments
  double a_alpha = 0.0;
  double a_median = 0.0;
  bool fallback_used = false;  // nothing survived; best group retained

  double pair(int i, int j) const { return a_pair[static_cast<std::size_t>(i) * groups.size() + j]; }
  double pair_ensemble(int i, int j) const {
    return a_pair_ensemble[static_cast<std::size_t>(i) * groups.size() + j];
  }
};

struct MergeEvent {
  std::vector<int> left;
  std::vector<int> right;
  std::vector<int> merged;
  double a_union = 0.0;     // a_ij of the merged pair
  double a_ensemble = 0.0;  // a_(i)(j) of the two-model ensemble
  double ratio = 0.0;       // m_ij, < 1 for every recorded merge
};

struct MergeTrace {
  std::vector<MergeEvent> events;
  std::vector<std::vector<int>> final_groups;
  /// Pairwise m_ij over final_groups at termination (row-major, 0 diagonal);
  /// empty when a single group remains. All entries >= 1.
  std::vector<double> final_ratios;
};

struct PhalanxScreenResult {
  std::vector<int> candidate;
  double a_solo = 0.0;
  bool pass_solo = false;
  bool pass_ensemble = false;
  int witness_ensemble = -1;
  bool kept = false;
};

struct PhalanxScreening {
  std::vector<PhalanxScreenResult> candidates;
  bool fallback_used = false;
};

/// Screens initial groups with the three strength tests; a group survives if
/// it passes any of them. Warms the cache with all d singleton and d(d-1)/2
/// pair fits.
std::vector<std::vector<int>> screen_groups(const std::vector<std::vector<int>>& groups,
                                            Evaluator& evaluator, EvalCache& cache,
                                            const NullCalibration& calib, int threads,
                                            ScreeningReport* report = nullptr);

/// Repeatedly merges the pair minimizing m_ij = a_(i)(j) / a_ij while the
/// minimum is below 1. Ties break to the lexicographically smallest pair of
/// canonical group keys.
std::vector<std::vector<int>> hierarchical_merge(const std::vector<std::vector<int>>& survivors,
                                                 Evaluator& evaluator, EvalCache& cache, int threads,
                                                 MergeTrace* trace = nullptr);

/// Keeps a candidate when it is strong alone or strong in a two-model
/// ensemble with another candidate; the single-model test is not applied.
/// Requires no new fits.
std::vector<std::vector<int>> screen_phalanxes(const std::vector<std::vector<int>>& candidates,
                                               Evaluator& evaluator, EvalCache& cache,
                                               const NullCalibration& calib,
                                               PhalanxScreening* screening = nullptr);

struct FormationResult {
  std::vector<std::vector<int>> phalanxes;
  ScreeningReport screening;
  MergeTrace merge_trace;
  PhalanxScreening phalanx_screening;
  NullCalibration calibration;
  long fit_count = 0;
  int initial_group_count = 0;
};

/// Full pipeline with an injected evaluator (testing hook): screening,
/// hierarchical merging, phalanx screening, one shared cache.
FormationResult form_phalanxes_with(Evaluator& evaluator, const std::vector<std::vector<int>>& groups,
                                    const NullCalibration& calib, int threads = 1);

/// Full pipeline on a dataset: null calibration, forest evaluator at
/// formation_trees, then the three stages.
FormationResult form_phalanxes(const Dataset& dataset, const GroupingPlan& plan,
                               const FormationConfig& config);

}  // namespace epx
