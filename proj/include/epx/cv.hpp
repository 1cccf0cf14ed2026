#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "epx/dataset.hpp"
#include "epx/ensemble.hpp"
#include "epx/formation.hpp"

namespace epx {

/// Stratified fold ids: actives are shuffled and dealt round-robin, then
/// inactives continue the deal, so fold sizes and per-fold active counts
/// each differ by at most one.
struct FoldAssignment {
  std::vector<int> fold_of;  // per observation, in 0..k-1
  int k = 0;
  std::uint64_t seed = 0;
};

FoldAssignment balanced_folds(const std::vector<int>& labels, int k, std::uint64_t seed);

/// What to train inside each fold.
struct PipelineSpec {
  enum class Kind { EpxFixed, EpxReform, PlainForest };
  Kind kind = Kind::PlainForest;
  std::vector<std::vector<int>> phalanxes;  // EpxFixed
  FormationConfig formation;                // EpxReform
  ForestConfig forest;                      // member/forest fits (500 trees default)
};

struct CvConfig {
  int k = 10;
  int repeats = 16;
  std::uint64_t seed = 0;
  /// Shortlist size for IE; 0 = min(300, N).
  int ie_shortlist = 0;
  int threads = 1;
};

struct CvResult {
  int k = 0;
  int repeats = 0;
  std::uint64_t seed = 0;
  int ie_shortlist = 0;
  std::vector<std::vector<double>> probs;  // [repeat][obs] cross-validated pi-hat
  /// [repeat][member][obs]; filled only for fixed-phalanx EPX pipelines.
  std::vector<std::vector<std::vector<double>>> member_probs;
  std::vector<double> avep;  // per repeat
  std::vector<double> ie;   // per repeat
};

CvResult cross_validate(const Dataset& dataset, const PipelineSpec& pipeline, const CvConfig& config);

/// Runs both pipelines on identical fold splits and counts the repeats where
/// the first one has the larger AveP.
struct CvComparison {
  CvResult main;
  CvResult baseline;
  int main_wins = 0;  // strict wins out of `repeats`
};

CvComparison compare_pipelines(const Dataset& dataset, const PipelineSpec& main,
                               const PipelineSpec& baseline, const CvConfig& config);

int win_count(const CvResult& main, const CvResult& baseline);

/// Rank matrix of the active observations: one column per phalanx, one for
/// the ensemble, optionally one for a baseline. Rank 1 = highest probability;
/// ties take the mean rank. Rows are actives ordered by ensemble rank.
struct DiversityMap {
  std::vector<int> active_rows;           // observation indices, by ensemble rank
  std::vector<std::string> column_names;  // "PX-1", ..., "EPX"[, baseline]
  std::vector<std::vector<double>> ranks; // [row][column]
  std::vector<double> column_avep;
};

DiversityMap diversity_map(const Dataset& dataset, const EpxModel& model, const CvResult& cv,
                           const CvResult* baseline = nullptr, int repeat = 0,
                           const std::string& baseline_name = "RF");

}  // namespace epx
