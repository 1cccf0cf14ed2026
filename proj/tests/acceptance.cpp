// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Criteria pin the worked formation example, the combinatorial
// identities of the metrics, forest behavior, end-to-end ranking benefit on
// planted data, and byte-level reproducibility of the CLI.

#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "epx/cv.hpp"
#include "epx/dataset.hpp"
#include "epx/ensemble.hpp"
#include "epx/formation.hpp"
#include "epx/grouping.hpp"
#include "epx/metrics.hpp"
#include "epx/rng.hpp"
#include "mock_evaluator.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kThreads = 2;

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool condition, const std::string& message) {
    if (!condition) {
      pass = false;
      note(message);
    }
  }

  void note(const std::string& message) {
    if (!detail.empty()) detail += "; ";
    detail += message;
  }
};

std::string fmt(double v) {
  std::ostringstream ss;
  ss.precision(4);
  ss << v;
  return ss.str();
}

// --- C1: golden merge trace -------------------------------------------------

Outcome c1_golden_merge_trace() {
  Outcome out;
  auto ev = mock::toy_three_group_evaluator();
  const auto calib = mock::permissive_calibration();
  const auto result = epx::form_phalanxes_with(ev, {{0}, {1}, {2}}, calib, 1);

  out.require(result.merge_trace.events.size() == 1, "expected exactly one merge event");
  if (!result.merge_trace.events.empty()) {
    const auto& event = result.merge_trace.events[0];
    out.require(event.left == std::vector<int>{1} && event.right == std::vector<int>{2},
                "first merge is not (G2,G3)");
    out.require(event.merged.size() == 2, "merged phalanx does not hold two original variables");
    out.require(std::abs(event.ratio - 0.57) <= 0.05, "m_23 ratio " + fmt(event.ratio));
  }
  out.require(result.phalanxes.size() == 2, "expected 2 final phalanxes");
  std::set<std::vector<int>> got(result.phalanxes.begin(), result.phalanxes.end());
  out.require(got.count({0}) == 1 && got.count({1, 2}) == 1, "phalanx membership wrong");

  // pre-merge ratios from the injected a values
  const double m12 = 0.069 / 0.052;
  const double m13 = 0.050 / 0.037;
  out.require(std::abs(m12 - 1.33) <= 0.05 && std::abs(m13 - 1.35) <= 0.05,
              "pre-merge ratio arithmetic off");
  // post-merge ratio 1.18 stops the algorithm
  out.require(result.merge_trace.final_ratios.size() == 4 &&
                  std::abs(result.merge_trace.final_ratios[1] - 1.18) <= 0.05,
              "post-merge ratio not 1.18");
  out.note("merge (G2,G3) at m=" + fmt(0.031 / 0.054) + ", stop at m=1.18, p=2, fits=" +
               std::to_string(result.fit_count));
  return out;
}

// --- C2: fit-count bound ------------------------------------------------------

Outcome c2_fit_bound() {
  Outcome out;
  epx::Rng rng(20240215);
  long max_fits = 0;
  for (int instance = 0; instance < 200; ++instance) {
    const int d = 1 + rng.below_int(12);
    std::vector<std::vector<int>> groups(d);
    for (int i = 0; i < d; ++i) groups[i] = {i};
    mock::HashEvaluator ev(epx::mix64(99, instance));
    epx::NullCalibration calib = mock::permissive_calibration();
    calib.a_quantile = 0.2 * rng.uniform();
    calib.a_median = calib.a_quantile / 2.0;
    const auto result = epx::form_phalanxes_with(ev, groups, calib, 1);
    out.require(result.fit_count <= static_cast<long>(d) * d,
                "instance " + std::to_string(instance) + ": " + std::to_string(result.fit_count) +
                    " fits > d^2 with d=" + std::to_string(d));
    out.require(result.fit_count == ev.calls(), "cache fitted a set twice");
    if (result.merge_trace.events.empty()) {
      out.require(result.fit_count <= static_cast<long>(d) * (d + 1) / 2,
                  "no merges but fits exceed d(d+1)/2");
    }
    max_fits = std::max(max_fits, result.fit_count);
    if (!out.pass) break;
  }
  out.note("200 instances (d <= 12), max fits " + std::to_string(max_fits));
  return out;
}

// --- C3: AveP oracle equivalence ---------------------------------------------

Outcome c3_avep_oracle() {
  Outcome out;
  long configs = 0;
  double worst = 0;
  for (int n = 1; n <= 8 && out.pass; ++n) {
    for (int comp = 0; comp < (1 << (n - 1)) && out.pass; ++comp) {
      std::vector<double> scores(n);
      double level = static_cast<double>(n);
      scores[0] = level;
      for (int i = 1; i < n; ++i) {
        if (!(comp & (1 << (i - 1)))) level -= 1.0;
        scores[i] = level;
      }
      for (int mask = 1; mask < (1 << n); ++mask) {
        std::vector<int> labels(n);
        for (int i = 0; i < n; ++i) labels[i] = (mask >> i) & 1;
        const double expected = oracle::avep_bruteforce(scores, labels);
        const double actual = epx::ave_p(scores, labels);
        worst = std::max(worst, std::abs(actual - expected));
        ++configs;
        if (std::abs(actual - expected) > 1e-12) {
          out.require(false, "N=" + std::to_string(n) + " mask=" + std::to_string(mask) +
                                 " |diff|=" + fmt(std::abs(actual - expected)));
          break;
        }
      }
    }
  }

  // N = 50 with random tie blocks against a 1e6-draw Monte-Carlo oracle.
  epx::Rng rng(606);
  for (int trial = 0; trial < 2 && out.pass; ++trial) {
    const int n = 50;
    std::vector<double> scores(n);
    std::vector<int> labels(n);
    int m = 0;
    for (int i = 0; i < n; ++i) {
      scores[i] = static_cast<double>(rng.below(7));  // heavy tie blocks
      labels[i] = rng.bernoulli(0.3) ? 1 : 0;
      m += labels[i];
    }
    if (m == 0) labels[0] = 1;
    const double mc = oracle::avep_monte_carlo(scores, labels, 1000000, 4242 + trial);
    const double actual = epx::ave_p(scores, labels);
    out.require(std::abs(actual - mc) <= 1e-3,
                "N=50 trial " + std::to_string(trial) + " |diff|=" + fmt(std::abs(actual - mc)));
  }
  out.note(std::to_string(configs) + " exhaustive configs, worst |diff| " + fmt(worst) +
               "; 2 Monte-Carlo configs at N=50");
  return out;
}

// --- C4: null calibration at the AID-348 shape ----------------------------------

Outcome c4_null_calibration() {
  Outcome out;
  const auto calib = epx::null_calibration(4946, 48, 1000, 0.95, 348, kThreads);
  const auto again = epx::null_calibration(4946, 48, 1000, 0.95, 348, 1);
  out.require(calib.samples == again.samples, "not deterministic per seed");

  const auto reference = oracle::null_avep_samples(4946, 48, 20000, 9001);
  const double ref_median = oracle::quantile(reference, 0.5);
  const double ref_q95 = oracle::quantile(reference, 0.95);
  out.require(std::abs(calib.a_median - ref_median) <= 0.01,
              "median " + fmt(calib.a_median) + " vs oracle " + fmt(ref_median));
  out.require(std::abs(calib.a_quantile - ref_q95) <= 0.01,
              "q95 " + fmt(calib.a_quantile) + " vs oracle " + fmt(ref_q95));
  out.note("a_0.5=" + fmt(calib.a_median) + " (oracle " + fmt(ref_median) + "), a_0.95=" +
               fmt(calib.a_quantile) + " (oracle " + fmt(ref_q95) + ")");
  return out;
}

// --- C5: hit-curve / IE identities -----------------------------------------------

Outcome c5_identities() {
  Outcome out;
  epx::Rng rng(515);
  for (int trial = 0; trial < 1000 && out.pass; ++trial) {
    const int n = 2 + rng.below_int(80);
    epx::RankedScores ranked;
    int m = 0;
    for (int i = 0; i < n; ++i) {
      ranked.scores.push_back(static_cast<double>(rng.below(10)));
      ranked.labels.push_back(rng.bernoulli(0.3) ? 1 : 0);
      m += ranked.labels.back();
    }
    if (m == 0) {
      ranked.labels[rng.below_int(n)] = 1;
      m = 1;
    }
    const auto curve = epx::hit_curve(ranked);
    out.require(curve.hits[n - 1] == static_cast<double>(m), "H(N) != M");
    const int shortlist = 1 + rng.below_int(n);
    const double ie = epx::initial_enhancement(ranked, shortlist);
    out.require(std::abs(ie - curve.hit_rate(shortlist) * n / m) <= 1e-12, "IE != h(n)N/M");
  }

  // perfect ranking: AveP = 1 and IE = min(N/n, N/M) for n >= M
  for (const auto& [n, m] : std::vector<std::pair<int, int>>{{40, 5}, {100, 10}, {64, 64 / 4}}) {
    std::vector<double> scores(n);
    std::vector<int> labels(n, 0);
    for (int i = 0; i < n; ++i) scores[i] = static_cast<double>(n - i);
    for (int i = 0; i < m; ++i) labels[i] = 1;
    out.require(std::abs(epx::ave_p(scores, labels) - 1.0) <= 1e-12, "perfect AveP != 1");
    for (int shortlist = m; shortlist <= n; shortlist += std::max(1, (n - m) / 4)) {
      const double ie = epx::initial_enhancement({scores, labels}, shortlist);
      const double expected = std::min(static_cast<double>(n) / shortlist,
                                       static_cast<double>(n) / m);
      out.require(std::abs(ie - expected) <= 1e-12, "perfect-ranking IE mismatch");
    }
  }
  out.note("1000 random instances + perfect-ranking checks");
  return out;
}

// --- C6: forest sanity --------------------------------------------------------

Outcome c6_forest_sanity() {
  Outcome out;

  {  // bootstrap exclusion fraction
    const int n = 1000;
    epx::SynthSpec spec;
    spec.n_obs = n;
    spec.active_fraction = 0.3;
    spec.effect_strength = 0.2;
    const auto synth = epx::synth_generate(spec, 161);
    std::vector<int> all_vars(synth.dataset.n_vars());
    for (int c = 0; c < synth.dataset.n_vars(); ++c) all_vars[c] = c;
    epx::ForestConfig config;
    config.n_trees = 200;
    config.min_node_size = 400;
    config.seed = 7;
    config.threads = kThreads;
    const auto forest = epx::fit(synth.dataset, all_vars, config);
    double total = 0;
    for (const auto& counts : forest.inbag) {
      int oob = 0;
      for (auto c : counts) oob += (c == 0);
      total += static_cast<double>(oob) / n;
    }
    const double fraction = total / forest.trees.size();
    const double expected = std::pow(1.0 - 1.0 / n, n);
    out.require(std::abs(fraction - expected) <= 0.01,
                "oob fraction " + fmt(fraction) + " vs " + fmt(expected));
    out.note("oob fraction " + fmt(fraction) + " (target " + fmt(expected) + ")");
  }

  {  // separable data
    const auto synth = epx::synth_generate({.n_obs = 200,
                                            .active_fraction = 0.2,
                                            .n_blocks = 1,
                                            .block_size = 3,
                                            .n_noise_groups = 2,
                                            .noise_group_size = 3,
                                            .effect_strength = 1.0,
                                            .background_rate = 0.02},
                                           6);
    std::vector<int> all_vars(synth.dataset.n_vars());
    for (int c = 0; c < synth.dataset.n_vars(); ++c) all_vars[c] = c;
    epx::ForestConfig config;
    config.n_trees = 150;
    config.seed = 21;
    const auto record = epx::evaluate(synth.dataset, all_vars, config);
    out.require(record.assessment >= 0.95, "separable OOB AveP " + fmt(record.assessment));
    out.detail += "; separable AveP " + fmt(record.assessment);
  }

  {  // permuted labels stay under the null quantile
    const int n = 160;
    const auto calib = epx::null_calibration(n, 16, 1000, 0.95, 40);
    int inside = 0;
    for (int seed = 0; seed < 20; ++seed) {
      const auto synth = epx::synth_generate({.n_obs = n,
                                              .active_fraction = 0.1,
                                              .n_blocks = 1,
                                              .block_size = 4,
                                              .n_noise_groups = 2,
                                              .noise_group_size = 4,
                                              .effect_strength = 0.0},
                                             700 + seed);
      std::vector<int> all_vars(synth.dataset.n_vars());
      for (int c = 0; c < synth.dataset.n_vars(); ++c) all_vars[c] = c;
      epx::ForestConfig config;
      config.n_trees = 150;
      config.seed = 360 + seed;
      const auto record = epx::evaluate(synth.dataset, all_vars, config);
      inside += (record.assessment <= calib.a_quantile);
    }
    out.require(inside >= 18, "only " + std::to_string(inside) + "/20 permuted runs inside the null");
    out.detail += "; " + std::to_string(inside) + "/20 null runs inside band";
  }

  {  // thread-count determinism
    const auto synth = epx::synth_generate({.n_obs = 150, .active_fraction = 0.15}, 31);
    std::vector<int> all_vars(synth.dataset.n_vars());
    for (int c = 0; c < synth.dataset.n_vars(); ++c) all_vars[c] = c;
    epx::ForestConfig config;
    config.n_trees = 80;
    config.seed = 5;
    config.threads = 1;
    const auto a = epx::fit(synth.dataset, all_vars, config);
    config.threads = 8;
    const auto b = epx::fit(synth.dataset, all_vars, config);
    epx::EpxModel ma;
    ma.phalanxes = {a.variable_subset};
    ma.forests = {a};
    ma.columns = synth.dataset.columns();
    epx::EpxModel mb = ma;
    mb.forests = {b};
    out.require(epx::model_to_json(ma) == epx::model_to_json(mb) && a.inbag == b.inbag,
                "forests differ across thread counts");
  }
  return out;
}

// --- C7: end-to-end EPX benefit ---------------------------------------------------

Outcome c7_epx_beats_forest() {
  Outcome out;
  const int seeds = 10;
  const int repeats = 8;
  int seed_successes = 0;
  std::string win_log;
  for (int seed = 0; seed < seeds; ++seed) {
    const auto synth = epx::synth_generate({.n_obs = 500,
                                            .active_fraction = 0.05,
                                            .n_blocks = 2,
                                            .block_size = 5,
                                            .n_noise_groups = 8,
                                            .noise_group_size = 5,
                                            .effect_strength = 0.85,
                                            .background_rate = 0.1},
                                           12000 + seed);

    epx::FormationConfig formation;
    formation.alpha = 0.95;
    formation.permutations = 1000;
    formation.formation_trees = 150;
    formation.seed = epx::mix64(777, seed);
    formation.threads = kThreads;
    const auto formed =
        epx::form_phalanxes(synth.dataset, epx::group_by_names(synth.dataset), formation);

    epx::PipelineSpec epx_spec;
    epx_spec.kind = epx::PipelineSpec::Kind::EpxFixed;
    epx_spec.phalanxes = formed.phalanxes;
    epx_spec.forest.n_trees = 500;
    epx::PipelineSpec forest_spec;
    forest_spec.kind = epx::PipelineSpec::Kind::PlainForest;
    forest_spec.forest.n_trees = 500;

    epx::CvConfig cv_config;
    cv_config.k = 10;
    cv_config.repeats = repeats;
    cv_config.seed = epx::mix64(888, seed);
    cv_config.threads = kThreads;
    const auto cmp = epx::compare_pipelines(synth.dataset, epx_spec, forest_spec, cv_config);
    const bool majority = cmp.main_wins * 2 > repeats;
    seed_successes += majority;
    win_log += (win_log.empty() ? "" : ",") + std::to_string(cmp.main_wins);
  }
  out.require(seed_successes * 10 >= seeds * 7,
              "EPX won a majority of repeats in only " + std::to_string(seed_successes) + "/" +
                  std::to_string(seeds) + " seeds");
  out.note("wins per seed of " + std::to_string(repeats) + ": " + win_log + " -> " +
               std::to_string(seed_successes) + "/" + std::to_string(seeds) + " seed successes");
  return out;
}

// --- C8: Jaccard / Ward recovery ----------------------------------------------------

Outcome c8_jaccard_ward() {
  Outcome out;
  epx::DissimilarityMatrix dist(6);
  for (int i = 0; i < 6; ++i) {
    for (int j = i + 1; j < 6; ++j) {
      dist.set(i, j, ((i < 3) == (j < 3)) ? 0.1 : 0.9);
    }
  }
  const auto plan = epx::ward_cluster(dist, 2);
  out.require(plan.groups == std::vector<std::vector<int>>{{0, 1, 2}, {3, 4, 5}},
              "ward cut did not recover the two blocks");

  std::vector<std::vector<double>> raw(6, std::vector<double>(6, 0.0));
  for (int i = 0; i < 6; ++i) {
    for (int j = 0; j < 6; ++j) raw[i][j] = dist.at(i, j);
  }
  double best = 1e300;
  std::vector<std::vector<int>> best_partition;
  for (const auto& partition : oracle::two_partitions(6)) {
    const double objective = oracle::ward_objective(partition, raw);
    if (objective < best) {
      best = objective;
      best_partition = partition;
    }
  }
  out.require(best_partition == plan.groups, "exhaustive Ward optimum differs from the cut");

  int pairs = 0;
  for (int x = 1; x < 8 && out.pass; ++x) {
    for (int y = 1; y < 8; ++y) {
      std::vector<double> xi(3);
      std::vector<double> xj(3);
      int both = 0;
      int either = 0;
      for (int r = 0; r < 3; ++r) {
        xi[r] = (x >> r) & 1;
        xj[r] = (y >> r) & 1;
        both += (xi[r] == 1.0 && xj[r] == 1.0);
        either += (xi[r] == 1.0 || xj[r] == 1.0);
      }
      const double expected = 1.0 - static_cast<double>(both) / either;
      const double actual =
          epx::jaccard_distance({xi.data(), xi.size()}, {xj.data(), xj.size()});
      ++pairs;
      if (std::abs(actual - expected) > 1e-15) {
        out.require(false, "jaccard mismatch on pair " + std::to_string(x) + "," + std::to_string(y));
        break;
      }
    }
  }
  out.note("2-block recovery exact; " + std::to_string(pairs) + " hand-counted jaccard pairs");
  return out;
}

// --- C9: diversity-map shape -----------------------------------------------------------

Outcome c9_diversity_shape() {
  Outcome out;
  const int seeds = 10;
  int seed_successes = 0;
  std::string log;
  for (int seed = 0; seed < seeds; ++seed) {
    const auto synth = epx::synth_generate({.n_obs = 300,
                                            .active_fraction = 0.1,
                                            .n_blocks = 2,
                                            .block_size = 5,
                                            .n_noise_groups = 3,
                                            .noise_group_size = 5,
                                            .effect_strength = 0.95,
                                            .background_rate = 0.08},
                                           34000 + seed);
    epx::PipelineSpec spec;
    spec.kind = epx::PipelineSpec::Kind::EpxFixed;
    spec.phalanxes = {synth.informative_blocks[0], synth.informative_blocks[1]};
    spec.forest.n_trees = 300;
    epx::CvConfig cv_config;
    cv_config.k = 10;
    cv_config.repeats = 1;
    cv_config.seed = epx::mix64(5150, seed);
    cv_config.threads = kThreads;
    const auto cv = epx::cross_validate(synth.dataset, spec, cv_config);

    epx::ForestConfig fc;
    fc.n_trees = 300;
    fc.seed = epx::mix64(611, seed);
    fc.threads = kThreads;
    const auto model = epx::fit_epx(synth.dataset, spec.phalanxes, fc);
    const auto map = epx::diversity_map(synth.dataset, model, cv);

    int own_better = 0;
    int total = 0;
    for (std::size_t row = 0; row < map.active_rows.size(); ++row) {
      const int mech = synth.mechanism[map.active_rows[row]];
      if (mech < 0) continue;
      ++total;
      own_better += (map.ranks[row][mech] < map.ranks[row][1 - mech]);
    }
    const bool ok = own_better * 100 >= total * 80;
    seed_successes += ok;
    log += (log.empty() ? "" : ",") + std::to_string(own_better * 100 / std::max(1, total)) + "%";
  }
  out.require(seed_successes * 10 >= seeds * 7,
              "own-phalanx advantage held in only " + std::to_string(seed_successes) + "/" +
                  std::to_string(seeds) + " seeds");
  out.note("own-phalanx-better fractions: " + log + " -> " + std::to_string(seed_successes) +
               "/" + std::to_string(seeds) + " seeds at >= 80%");
  return out;
}

// --- C10: CLI reproducibility -------------------------------------------------------------

int run_cli(const std::string& args) {
  const std::string cmd = std::string(EPX_CLI_PATH) + " " + args + " 2>/dev/null";
  return WEXITSTATUS(std::system(cmd.c_str()));
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome c10_cli_reproducibility() {
  Outcome out;
  const fs::path root =
      fs::temp_directory_path() / ("epx_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(root);
  fs::create_directories(root);
  auto p = [&root](const std::string& rel) { return (root / rel).string(); };

  // The identical command sequence runs twice: --threads 1, then --threads 8
  // into the same freshly-cleared paths. Every primary artifact must come
  // back byte-identical.
  const std::vector<std::string> files = {
      "data/data.csv",       "data/kinds.csv", "data/truth.json", "data/manifest.json",
      "null.csv",            "null_samples.csv", "form/phalanxes.txt", "form/screening.csv",
      "form/screening_pairs.csv", "form/merge_trace.csv", "form/final_ratios.csv",
      "form/calibration.csv", "form/phalanx_screening.csv", "form/manifest.json", "model.json",
      "ranks.csv",           "cv/cv.csv",      "cv/manifest.json", "clusters.txt",
      "div/diversity.csv",   "div/column_avep.csv", "div/diversity.svg", "div/manifest.json",
      "hits.csv",            "hits.svg"};
  std::vector<std::string> snapshot;
  for (const int threads : {1, 8}) {
    for (const auto& file : files) fs::remove(root / file);
    const std::string t = " --threads " + std::to_string(threads);
    auto sh = [&](const std::string& args) {
      const int rc = run_cli(args);
      out.require(rc == 0, "exit " + std::to_string(rc) + " from: " + args.substr(0, args.find(' ')) +
                               t);
    };
    const std::string dir = root.string();
    sh("synth --n-obs 150 --active-frac 0.1 --blocks 2 --block-size 4 --noise-groups 2 "
       "--noise-group-size 4 --strength 0.9 --seed 42 --out " + dir + "/data");
    const std::string data = " --data " + dir + "/data/data.csv --kinds " + dir + "/data/kinds.csv";
    sh("null --n 500 --m 25 --b 1000 --alpha 0.95 --seed 1" + t + " --out " + dir +
       "/null.csv --samples-out " + dir + "/null_samples.csv");
    sh("form" + data + " --permutations 300 --formation-trees 50 --seed 2" + t + " --out " + dir +
       "/form");
    sh("fit" + data + " --phalanxes " + dir + "/form/phalanxes.txt --trees 80 --seed 3" + t +
       " --out " + dir + "/model.json");
    sh("rank --model " + dir + "/model.json --data " + dir + "/data/data.csv --out " + dir +
       "/ranks.csv");
    sh("cv" + data + " --pipeline epx --phalanxes " + dir +
       "/form/phalanxes.txt --trees 60 --k 4 --repeats 2 --baseline --seed 4" + t + " --out " + dir +
       "/cv");
    sh("cluster-groups" + data + " --k 4" + t + " --out " + dir + "/clusters.txt");
    sh("diversity" + data + " --model " + dir + "/model.json --k 4 --svg --seed 5" + t + " --out " +
       dir + "/div");
    sh("plot-hits --scores " + dir + "/data/data.csv --score-col BAA_1 --label-col y --out " + dir +
       "/hits.csv --svg " + dir + "/hits.svg");

    std::vector<std::string> contents;
    for (const auto& file : files) {
      contents.push_back(slurp(root / file));
      out.require(!contents.back().empty(), file + " missing or empty" + t);
    }
    if (snapshot.empty()) {
      snapshot = std::move(contents);
    } else {
      for (std::size_t i = 0; i < files.size(); ++i) {
        out.require(snapshot[i] == contents[i], files[i] + " differs across runs/threads");
      }
    }
  }
  fs::remove_all(root);
  out.note(std::to_string(files.size()) + " artifacts byte-identical across reruns and threads 1/8");
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  // optional argument: run only criteria whose name contains the substring
  const std::string filter = argc > 1 ? argv[1] : "";
  struct Criterion {
    std::string name;
    std::function<Outcome()> fn;
  };
  const std::vector<Criterion> criteria = {
      {"C1 golden merge trace", c1_golden_merge_trace},
      {"C2 fit-count bound", c2_fit_bound},
      {"C3 AveP oracle equivalence", c3_avep_oracle},
      {"C4 null calibration (N=4946, M=48)", c4_null_calibration},
      {"C5 hit-curve / IE identities", c5_identities},
      {"C6 forest sanity", c6_forest_sanity},
      {"C7 end-to-end EPX benefit", c7_epx_beats_forest},
      {"C8 Jaccard / Ward recovery", c8_jaccard_ward},
      {"C9 diversity-map shape", c9_diversity_shape},
      {"C10 CLI reproducibility", c10_cli_reproducibility},
  };

  int failures = 0;
  for (const auto& criterion : criteria) {
    if (!filter.empty() && criterion.name.find(filter) == std::string::npos) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      outcome = criterion.fn();
    } catch (const std::exception& e) {
      outcome.pass = false;
      outcome.detail = std::string("exception: ") + e.what();
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::cout << (outcome.pass ? "[PASS] " : "[FAIL] ") << criterion.name;
    if (!outcome.detail.empty()) std::cout << " — " << outcome.detail;
    std::cout << " (" << fmt(seconds) << "s)" << std::endl;
    failures += !outcome.pass;
  }
  if (failures > 0) {
    std::cout << failures << " criterion(s) failed" << std::endl;
    return 1;
  }
  std::cout << "all criteria passed" << std::endl;
  return 0;
}
