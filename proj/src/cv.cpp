#include "epx/cv.hpp"

#include <algorithm>

#include "epx/metrics.hpp"
#include "epx/parallel.hpp"
#include "epx/rng.hpp"

namespace epx {

FoldAssignment balanced_folds(const std::vector<int>& labels, int k, std::uint64_t seed) {
  const int n = static_cast<int>(labels.size());
  if (k < 2) throw DataError("balanced folds: k must be at least 2");
  if (k > n) throw DataError("balanced folds: k exceeds the number of observations");
  std::vector<int> actives;
  std::vector<int> inactives;
  for (int i = 0; i < n; ++i) (labels[i] == 1 ? actives : inactives).push_back(i);
  if (actives.empty()) throw DataError("balanced folds: no actives");

  Rng rng(mix64(seed, seed_stream::folds));
  rng.shuffle(actives);
  rng.shuffle(inactives);

  FoldAssignment assignment;
  assignment.fold_of.assign(n, -1);
  assignment.k = k;
  assignment.seed = seed;
  int counter = 0;
  for (int obs : actives) assignment.fold_of[obs] = counter++ % k;
  for (int obs : inactives) assignment.fold_of[obs] = counter++ % k;
  return assignment;
}

namespace {

struct FoldOutput {
  std::vector<double> probs;                // per test row
  std::vector<std::vector<double>> member;  // per phalanx, per test row
};

FoldOutput run_fold(const Dataset& dataset, const PipelineSpec& pipeline,
                    const std::vector<int>& train_rows, const std::vector<int>& test_rows,
                    std::uint64_t fold_seed) {
  const Dataset train = dataset.subset_rows(train_rows);
  if (train.n_active() == 0 || train.n_active() == train.n_obs()) {
    throw DataError("cross-validation: a training split lost one class entirely");
  }
  const FeatureMatrix test = dataset.rows_to_feature_matrix(test_rows);

  FoldOutput out;
  switch (pipeline.kind) {
    case PipelineSpec::Kind::PlainForest: {
      ForestConfig config = pipeline.forest;
      config.threads = 1;  // cross_validate parallelizes over (repeat, fold)
      config.seed = fold_seed;
      std::vector<int> all_vars(dataset.n_vars());
      for (int c = 0; c < dataset.n_vars(); ++c) all_vars[c] = c;
      const Forest forest = fit(train, all_vars, config);
      out.probs = predict_proba(forest, test);
      break;
    }
    case PipelineSpec::Kind::EpxFixed: {
      ForestConfig config = pipeline.forest;
      config.threads = 1;
      config.seed = fold_seed;
      const EpxModel model = fit_epx(train, pipeline.phalanxes, config);
      out.probs = predict_epx(model, test);
      out.member = predict_members(model, test);
      break;
    }
    case PipelineSpec::Kind::EpxReform: {
      FormationConfig formation = pipeline.formation;
      formation.seed = fold_seed;
      formation.threads = 1;
      const FormationResult formed = form_phalanxes(train, default_grouping(train), formation);
      ForestConfig config = pipeline.forest;
      config.threads = 1;
      config.seed = mix64(fold_seed, seed_stream::pipeline);
      const EpxModel model = fit_epx(train, formed.phalanxes, config);
      out.probs = predict_epx(model, test);
      break;
    }
  }
  return out;
}

}  // namespace

CvResult cross_validate(const Dataset& dataset, const PipelineSpec& pipeline, const CvConfig& config) {
  if (config.repeats < 1) throw DataError("cross-validation: need at least one repeat");
  const int n = dataset.n_obs();
  const bool track_members = pipeline.kind == PipelineSpec::Kind::EpxFixed;
  const int n_members = track_members ? static_cast<int>(pipeline.phalanxes.size()) : 0;

  CvResult result;
  result.k = config.k;
  result.repeats = config.repeats;
  result.seed = config.seed;
  result.ie_shortlist = config.ie_shortlist > 0 ? config.ie_shortlist : std::min(300, n);
  result.probs.assign(config.repeats, std::vector<double>(n, 0.0));
  if (track_members) {
    result.member_probs.assign(config.repeats,
                               std::vector<std::vector<double>>(n_members, std::vector<double>(n, 0.0)));
  }

  // One task per (repeat, fold); per-task seeds make the schedule irrelevant.
  struct Task {
    int repeat;
    int fold;
  };
  std::vector<Task> tasks;
  std::vector<FoldAssignment> folds(config.repeats);
  for (int r = 0; r < config.repeats; ++r) {
    folds[r] = balanced_folds(dataset.labels(), config.k, mix64(config.seed, r));
    for (int f = 0; f < config.k; ++f) tasks.push_back({r, f});
  }

  parallel_for(tasks.size(), config.threads, [&](std::size_t t) {
    const auto [r, f] = tasks[t];
    std::vector<int> train_rows;
    std::vector<int> test_rows;
    for (int i = 0; i < n; ++i) {
      (folds[r].fold_of[i] == f ? test_rows : train_rows).push_back(i);
    }
    const FoldOutput out = run_fold(dataset, pipeline, train_rows, test_rows,
                                    mix64(config.seed, r, f));
    for (std::size_t i = 0; i < test_rows.size(); ++i) {
      result.probs[r][test_rows[i]] = out.probs[i];
      for (int m = 0; m < static_cast<int>(out.member.size()); ++m) {
        result.member_probs[r][m][test_rows[i]] = out.member[m][i];
      }
    }
  });

  result.avep.resize(config.repeats);
  result.ie.resize(config.repeats);
  for (int r = 0; r < config.repeats; ++r) {
    RankedScores ranked{result.probs[r], dataset.labels()};
    result.avep[r] = ave_p(ranked);
    result.ie[r] = initial_enhancement(ranked, result.ie_shortlist);
  }
  return result;
}

int win_count(const CvResult& main, const CvResult& baseline) {
  if (main.avep.size() != baseline.avep.size()) {
    throw DataError("win count: repeat counts differ");
  }
  int wins = 0;
  for (std::size_t r = 0; r < main.avep.size(); ++r) wins += (main.avep[r] > baseline.avep[r]);
  return wins;
}

CvComparison compare_pipelines(const Dataset& dataset, const PipelineSpec& main,
                               const PipelineSpec& baseline, const CvConfig& config) {
  CvComparison comparison;
  comparison.main = cross_validate(dataset, main, config);
  comparison.baseline = cross_validate(dataset, baseline, config);
  comparison.main_wins = win_count(comparison.main, comparison.baseline);
  return comparison;
}

DiversityMap diversity_map(const Dataset& dataset, const EpxModel& model, const CvResult& cv,
                           const CvResult* baseline, int repeat, const std::string& baseline_name) {
  if (repeat < 0 || repeat >= cv.repeats) throw DataError("diversity map: repeat out of range");
  if (cv.member_probs.empty()) {
    throw DataError("diversity map: the CV result has no per-phalanx probabilities "
                    "(run a fixed-phalanx EPX pipeline)");
  }
  const auto& members = cv.member_probs[repeat];
  if (members.size() != model.phalanxes.size()) {
    throw DataError("diversity map: model phalanxes do not match the CV pipeline");
  }

  DiversityMap map;
  std::vector<const std::vector<double>*> columns;
  for (std::size_t m = 0; m < members.size(); ++m) {
    map.column_names.push_back("PX-" + std::to_string(m + 1));
    columns.push_back(&members[m]);
  }
  map.column_names.push_back("EPX");
  columns.push_back(&cv.probs[repeat]);
  if (baseline) {
    if (repeat >= baseline->repeats) throw DataError("diversity map: baseline lacks this repeat");
    map.column_names.push_back(baseline_name);
    columns.push_back(&baseline->probs[repeat]);
  }

  std::vector<std::vector<double>> all_ranks;
  for (const auto* col : columns) {
    all_ranks.push_back(fractional_ranks(*col));
    map.column_avep.push_back(ave_p(*col, dataset.labels()));
  }

  const std::size_t ensemble_col = members.size();
  for (int i = 0; i < dataset.n_obs(); ++i) {
    if (dataset.labels()[i] == 1) map.active_rows.push_back(i);
  }
  std::stable_sort(map.active_rows.begin(), map.active_rows.end(), [&](int a, int b) {
    return all_ranks[ensemble_col][a] < all_ranks[ensemble_col][b];
  });

  map.ranks.resize(map.active_rows.size());
  for (std::size_t row = 0; row < map.active_rows.size(); ++row) {
    map.ranks[row].resize(columns.size());
    for (std::size_t c = 0; c < columns.size(); ++c) {
      map.ranks[row][c] = all_ranks[c][map.active_rows[row]];
    }
  }
  return map;
}

}  // namespace epx
