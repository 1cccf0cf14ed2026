#pragma once

#include <string>
#include <vector>

#include "epx/dataset.hpp"
#include "epx/forest.hpp"

namespace epx {

/// Final ensemble: one fitted forest per phalanx; prediction averages the
/// member probabilities. Immutable after fit.
struct EpxModel {
  static constexpr int kFormatVersion = 1;

  std::vector<std::vector<int>> phalanxes;  // pairwise-disjoint column index sets
  std::vector<Forest> forests;              // forests[i] restricted to phalanxes[i]
  std::vector<VariableMeta> columns;        // training column space, for alignment
  int n_train_obs = 0;
  double train_prevalence = 0.0;
  ForestConfig config;            // as used for the member fits
  std::string formation_ref;      // free-form audit pointer to the formation run

  int member_count() const { return static_cast<int>(forests.size()); }
};

/// One forest per phalanx; member k is fitted with seed mix64(config.seed, k).
EpxModel fit_epx(const Dataset& dataset, const std::vector<std::vector<int>>& phalanxes,
                 const ForestConfig& config, const std::string& formation_ref = "");

/// Arithmetic mean of the member probabilities.
std::vector<double> predict_epx(const EpxModel& model, const FeatureMatrix& features);

/// Per-member probabilities, one vector per phalanx.
std::vector<std::vector<double>> predict_members(const EpxModel& model, const FeatureMatrix& features);

/// Self-describing versioned JSON: phalanx membership by variable name plus
/// full tree encodings. Loading refuses unknown versions.
void save_model(const EpxModel& model, const std::string& path);
EpxModel load_model(const std::string& path);

std::string model_to_json(const EpxModel& model);
EpxModel model_from_json(const std::string& text, const std::string& context);

}  // namespace epx
