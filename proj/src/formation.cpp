#include "epx/formation.hpp"

#include <algorithm>
#include <limits>

#include "epx/parallel.hpp"

namespace epx {

namespace {

std::vector<int> canonical(std::vector<int> set) {
  std::sort(set.begin(), set.end());
  return set;
}

std::vector<int> union_of(const std::vector<int>& a, const std::vector<int>& b) {
  std::vector<int> out;
  out.reserve(a.size() + b.size());
  std::merge(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace

double ensemble_score(const EvalRecord& a, const EvalRecord& b, const std::vector<int>& labels) {
  if (a.oob_probs.size() != b.oob_probs.size()) {
    throw DataError("ensemble_score: probability vectors differ in length");
  }
  std::vector<double> averaged(a.oob_probs.size());
  for (std::size_t i = 0; i < averaged.size(); ++i) {
    averaged[i] = (a.oob_probs[i] + b.oob_probs[i]) / 2.0;
  }
  return ave_p(averaged, labels);
}

EvalRecord ForestEvaluator::evaluate(const std::vector<int>& variable_set) {
  ForestConfig config = config_;
  config.threads = 1;  // formation parallelizes across fits
  config.seed = mix64(seed_, hash_index_set(canonical(variable_set)));
  return epx::evaluate(dataset_, variable_set, config);
}

double ForestEvaluator::ensemble_score(const EvalRecord& a, const EvalRecord& b) const {
  return epx::ensemble_score(a, b, dataset_.labels());
}

const EvalRecord& EvalCache::get_or_evaluate(const std::vector<int>& variable_set,
                                             Evaluator& evaluator) {
  const auto key = canonical(variable_set);
  auto it = records_.find(key);
  if (it == records_.end()) {
    it = records_.emplace(key, evaluator.evaluate(key)).first;
    ++fit_count_;
  }
  return it->second;
}

const EvalRecord* EvalCache::find(const std::vector<int>& variable_set) const {
  auto it = records_.find(canonical(variable_set));
  return it == records_.end() ? nullptr : &it->second;
}

void EvalCache::warm(const std::vector<std::vector<int>>& sets, Evaluator& evaluator, int threads) {
  std::vector<std::vector<int>> missing;
  for (const auto& set : sets) {
    auto key = canonical(set);
    if (records_.count(key)) continue;
    if (std::find(missing.begin(), missing.end(), key) == missing.end()) {
      missing.push_back(std::move(key));
    }
  }
  std::sort(missing.begin(), missing.end());
  std::vector<EvalRecord> results(missing.size());
  parallel_for(missing.size(), threads,
               [&](std::size_t i) { results[i] = evaluator.evaluate(missing[i]); });
  for (std::size_t i = 0; i < missing.size(); ++i) {
    records_.emplace(std::move(missing[i]), std::move(results[i]));
    ++fit_count_;
  }
}

std::vector<std::vector<int>> screen_groups(const std::vector<std::vector<int>>& groups,
                                            Evaluator& evaluator, EvalCache& cache,
                                            const NullCalibration& calib, int threads,
                                            ScreeningReport* report) {
  if (groups.empty()) throw DataError("screening: no groups");
  const int d = static_cast<int>(groups.size());
  std::vector<std::vector<int>> keys(d);
  for (int i = 0; i < d; ++i) keys[i] = canonical(groups[i]);

  // All singleton-group fits, then all pairwise-union fits.
  cache.warm(keys, evaluator, threads);
  std::vector<std::vector<int>> pair_sets;
  pair_sets.reserve(static_cast<std::size_t>(d) * (d - 1) / 2);
  for (int i = 0; i < d; ++i) {
    for (int j = i + 1; j < d; ++j) pair_sets.push_back(union_of(keys[i], keys[j]));
  }
  cache.warm(pair_sets, evaluator, threads);

  std::vector<double> a(d);
  for (int i = 0; i < d; ++i) a[i] = cache.find(keys[i])->assessment;

  std::vector<double> a_pair(static_cast<std::size_t>(d) * d, 0.0);
  std::vector<double> a_ens(static_cast<std::size_t>(d) * d, 0.0);
  {
    // Ensemble scores need no fits; compute the upper triangle in parallel.
    std::vector<std::pair<int, int>> pairs;
    for (int i = 0; i < d; ++i) {
      for (int j = i + 1; j < d; ++j) pairs.emplace_back(i, j);
    }
    parallel_for(pairs.size(), threads, [&](std::size_t p) {
      const auto [i, j] = pairs[p];
      const double union_a = cache.find(union_of(keys[i], keys[j]))->assessment;
      const double ens = evaluator.ensemble_score(*cache.find(keys[i]), *cache.find(keys[j]));
      a_pair[static_cast<std::size_t>(i) * d + j] = a_pair[static_cast<std::size_t>(j) * d + i] = union_a;
      a_ens[static_cast<std::size_t>(i) * d + j] = a_ens[static_cast<std::size_t>(j) * d + i] = ens;
    });
  }

  const double a_alpha = calib.a_quantile;
  const double a_median = calib.a_median;
  std::vector<GroupScreenResult> results(d);
  std::vector<std::vector<int>> survivors;
  for (int i = 0; i < d; ++i) {
    auto& r = results[i];
    r.group = keys[i];
    r.a_solo = a[i];
    r.pass_solo = a[i] >= a_alpha;
    for (int j = 0; j < d && (r.witness_single < 0 || r.witness_ensemble < 0); ++j) {
      if (j == i) continue;
      if (r.witness_single < 0 && a_median + a_pair[static_cast<std::size_t>(i) * d + j] - a[j] >= a_alpha) {
        r.pass_single_model = true;
        r.witness_single = j;
      }
      if (r.witness_ensemble < 0 && a_median + a_ens[static_cast<std::size_t>(i) * d + j] - a[j] >= a_alpha) {
        r.pass_ensemble = true;
        r.witness_ensemble = j;
      }
    }
    r.survived = r.pass_solo || r.pass_single_model || r.pass_ensemble;
    if (r.survived) survivors.push_back(keys[i]);
  }

  bool fallback = false;
  if (survivors.empty()) {
    // The ensemble must stay nonempty: retain the best group by a_i.
    int best = 0;
    for (int i = 1; i < d; ++i) {
      if (a[i] > a[best]) best = i;
    }
    results[best].survived = true;
    survivors.push_back(keys[best]);
    fallback = true;
  }

  if (report) {
    report->groups = std::move(results);
    report->a_pair = std::move(a_pair);
    report->a_pair_ensemble = std::move(a_ens);
    report->a_alpha = a_alpha;
    report->a_median = a_median;
    report->fallback_used = fallback;
  }
  return survivors;
}

std::vector<std::vector<int>> hierarchical_merge(const std::vector<std::vector<int>>& survivors,
                                                 Evaluator& evaluator, EvalCache& cache, int threads,
                                                 MergeTrace* trace) {
  if (survivors.empty()) throw DataError("merging: no surviving groups");
  std::vector<std::vector<int>> groups(survivors.size());
  for (std::size_t i = 0; i < survivors.size(); ++i) groups[i] = canonical(survivors[i]);

  MergeTrace local_trace;
  while (groups.size() > 1) {
    const int s = static_cast<int>(groups.size());
    // Union fits for every current pair. At the first iteration these were
    // all cached by screening; later iterations only miss the pairs that
    // involve the newest group.
    std::vector<std::vector<int>> unions;
    unions.reserve(static_cast<std::size_t>(s) * (s - 1) / 2);
    for (int i = 0; i < s; ++i) {
      for (int j = i + 1; j < s; ++j) unions.push_back(union_of(groups[i], groups[j]));
    }
    cache.warm(unions, evaluator, threads);

    int bi = -1;
    int bj = -1;
    double best_ratio = std::numeric_limits<double>::infinity();
    std::vector<double> ratios(static_cast<std::size_t>(s) * s, 0.0);
    for (int i = 0; i < s; ++i) {
      for (int j = i + 1; j < s; ++j) {
        const double a_union = cache.find(union_of(groups[i], groups[j]))->assessment;
        const double a_ens = evaluator.ensemble_score(*cache.find(groups[i]), *cache.find(groups[j]));
        const double ratio = a_ens / a_union;
        ratios[static_cast<std::size_t>(i) * s + j] = ratios[static_cast<std::size_t>(j) * s + i] = ratio;
        // Argmin with ties broken by the smaller canonical pair key.
        auto pair_key = [&](int x, int y) {
          return groups[x] < groups[y] ? std::pair(groups[x], groups[y])
                                       : std::pair(groups[y], groups[x]);
        };
        bool take = false;
        if (bi < 0 || ratio < best_ratio) {
          take = true;
        } else if (ratio == best_ratio) {
          take = pair_key(i, j) < pair_key(bi, bj);
        }
        if (take) {
          best_ratio = ratio;
          bi = i;
          bj = j;
        }
      }
    }

    if (best_ratio >= 1.0) {
      local_trace.final_ratios = std::move(ratios);
      break;
    }

    MergeEvent event;
    event.left = groups[bi];
    event.right = groups[bj];
    event.merged = union_of(groups[bi], groups[bj]);
    event.a_union = cache.find(event.merged)->assessment;
    event.a_ensemble = evaluator.ensemble_score(*cache.find(groups[bi]), *cache.find(groups[bj]));
    event.ratio = best_ratio;
    local_trace.events.push_back(std::move(event));

    groups.erase(groups.begin() + bj);
    groups[bi] = local_trace.events.back().merged;
  }

  local_trace.final_groups = groups;
  if (trace) *trace = std::move(local_trace);
  return groups;
}

std::vector<std::vector<int>> screen_phalanxes(const std::vector<std::vector<int>>& candidates,
                                               Evaluator& evaluator, EvalCache& cache,
                                               const NullCalibration& calib,
                                               PhalanxScreening* screening) {
  if (candidates.empty()) throw DataError("phalanx screening: no candidates");
  const int c = static_cast<int>(candidates.size());
  std::vector<const EvalRecord*> records(c);
  for (int i = 0; i < c; ++i) {
    records[i] = cache.find(candidates[i]);
    if (!records[i]) {
      throw DataError("phalanx screening: candidate missing from cache (merge must run first)");
    }
  }

  std::vector<PhalanxScreenResult> results(c);
  std::vector<std::vector<int>> kept;
  for (int i = 0; i < c; ++i) {
    auto& r = results[i];
    r.candidate = records[i]->variable_set;
    r.a_solo = records[i]->assessment;
    r.pass_solo = r.a_solo >= calib.a_quantile;
    for (int j = 0; j < c && r.witness_ensemble < 0; ++j) {
      if (j == i) continue;
      const double a_ens = evaluator.ensemble_score(*records[i], *records[j]);
      if (calib.a_median + a_ens - records[j]->assessment >= calib.a_quantile) {
        r.pass_ensemble = true;
        r.witness_ensemble = j;
      }
    }
    r.kept = r.pass_solo || r.pass_ensemble;
    if (r.kept) kept.push_back(r.candidate);
  }

  bool fallback = false;
  if (kept.empty()) {
    int best = 0;
    for (int i = 1; i < c; ++i) {
      if (results[i].a_solo > results[best].a_solo) best = i;
    }
    results[best].kept = true;
    kept.push_back(results[best].candidate);
    fallback = true;
  }
  if (screening) {
    screening->candidates = std::move(results);
    screening->fallback_used = fallback;
  }
  return kept;
}

FormationResult form_phalanxes_with(Evaluator& evaluator, const std::vector<std::vector<int>>& groups,
                                    const NullCalibration& calib, int threads) {
  FormationResult result;
  result.calibration = calib;
  result.initial_group_count = static_cast<int>(groups.size());
  EvalCache cache;
  const auto survivors =
      screen_groups(groups, evaluator, cache, calib, threads, &result.screening);
  const auto candidates = hierarchical_merge(survivors, evaluator, cache, threads, &result.merge_trace);
  result.phalanxes = screen_phalanxes(candidates, evaluator, cache, calib, &result.phalanx_screening);
  result.fit_count = cache.fit_count();

  // Figure-2 monotone containment: d >= s >= c >= p >= 1.
  if (!(groups.size() >= survivors.size() && survivors.size() >= candidates.size() &&
        candidates.size() >= result.phalanxes.size() && !result.phalanxes.empty())) {
    throw Error("formation stage counts are not monotone");
  }
  return result;
}

FormationResult form_phalanxes(const Dataset& dataset, const GroupingPlan& plan,
                               const FormationConfig& config) {
  plan.validate(dataset.n_vars());
  if (config.alpha < 0.5 || config.alpha >= 1.0) throw DataError("formation: alpha must be in [0.5, 1)");
  if (config.permutations < 1) throw DataError("formation: need at least one permutation");

  const NullCalibration calib =
      null_calibration(dataset.n_obs(), dataset.n_active(), config.permutations, config.alpha,
                       mix64(config.seed, seed_stream::null_calibration), config.threads);
  ForestConfig forest_config;
  forest_config.n_trees = config.formation_trees;
  ForestEvaluator evaluator(dataset, forest_config, mix64(config.seed, seed_stream::evaluator));
  return form_phalanxes_with(evaluator, plan.groups, calib, config.threads);
}

}  // namespace epx
