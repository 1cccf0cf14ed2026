#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "epx/cv.hpp"
#include "epx/dataset.hpp"
#include "epx/ensemble.hpp"
#include "epx/metrics.hpp"
#include "epx/rng.hpp"

namespace fs = std::filesystem;

namespace {

epx::SynthDataset two_mechanism_synth(std::uint64_t seed, int n_obs = 240) {
  return epx::synth_generate({.n_obs = n_obs,
                              .active_fraction = 0.1,
                              .n_blocks = 2,
                              .block_size = 5,
                              .n_noise_groups = 3,
                              .noise_group_size = 5,
                              .effect_strength = 0.9,
                              .background_rate = 0.08},
                             seed);
}

}  // namespace

TEST_SUITE_BEGIN("ensemble");

TEST_CASE("p=1: ensemble predictions equal the single member's") {
  const auto synth = two_mechanism_synth(3);
  epx::ForestConfig config;
  config.n_trees = 60;
  config.seed = 12;
  const auto model = epx::fit_epx(synth.dataset, {synth.informative_blocks[0]}, config);
  const auto fm = synth.dataset.to_feature_matrix();
  const auto ensemble = epx::predict_epx(model, fm);
  const auto member = epx::predict_proba(model.forests[0], fm);
  CHECK(ensemble == member);
}

TEST_CASE("member forests stay inside their phalanxes") {
  const auto synth = two_mechanism_synth(5);
  epx::ForestConfig config;
  config.n_trees = 40;
  config.seed = 4;
  const auto model =
      epx::fit_epx(synth.dataset, {synth.informative_blocks[0], synth.informative_blocks[1]}, config);
  for (int k = 0; k < model.member_count(); ++k) {
    const auto& allowed = model.phalanxes[k];
    for (const auto& tree : model.forests[k].trees) {
      for (const auto& node : tree.nodes) {
        if (!node.is_leaf()) {
          CHECK(std::find(allowed.begin(), allowed.end(), node.feature) != allowed.end());
        }
      }
    }
  }
}

TEST_CASE("prediction is the exact mean of member predictions") {
  const auto synth = two_mechanism_synth(7);
  epx::ForestConfig config;
  config.n_trees = 30;
  config.seed = 9;
  const auto model =
      epx::fit_epx(synth.dataset, {synth.informative_blocks[0], synth.informative_blocks[1], {10, 11}},
                   config);
  const auto fm = synth.dataset.to_feature_matrix();
  const auto ensemble = epx::predict_epx(model, fm);
  const auto members = epx::predict_members(model, fm);
  for (int r = 0; r < fm.n_rows; ++r) {
    double mean = 0;
    for (const auto& m : members) mean += m[r];
    mean /= static_cast<double>(members.size());
    CHECK(ensemble[r] == doctest::Approx(mean).epsilon(1e-15));
    CHECK(ensemble[r] >= 0.0);
    CHECK(ensemble[r] <= 1.0);
  }
}

TEST_CASE("constant members average arithmetically") {
  // two stump-only forests with constant outputs 0.2 and 0.6
  epx::EpxModel model;
  for (double p : {0.2, 0.6}) {
    epx::Forest forest;
    forest.variable_subset = {0};
    epx::Tree tree;
    epx::TreeNode leaf;
    leaf.n0 = static_cast<std::uint32_t>(10 - std::lround(p * 10));
    leaf.n1 = static_cast<std::uint32_t>(std::lround(p * 10));
    tree.nodes.push_back(leaf);
    forest.trees.push_back(tree);
    model.forests.push_back(forest);
    model.phalanxes.push_back({static_cast<int>(model.phalanxes.size())});
  }
  epx::FeatureMatrix fm;
  fm.n_rows = 3;
  fm.n_cols = 2;
  fm.values = {0, 0, 1, 0, 0, 1};
  for (double p : epx::predict_epx(model, fm)) CHECK(p == doctest::Approx(0.4));
}

TEST_CASE("ranking is invariant to phalanx storage order") {
  const auto synth = two_mechanism_synth(11);
  epx::ForestConfig config;
  config.n_trees = 40;
  config.seed = 21;
  const auto a =
      epx::fit_epx(synth.dataset, {synth.informative_blocks[0], synth.informative_blocks[1]}, config);

  // Same members, opposite storage order; member seeds follow the member
  // fits, so reuse the fitted forests directly.
  epx::EpxModel b = a;
  std::swap(b.phalanxes[0], b.phalanxes[1]);
  std::swap(b.forests[0], b.forests[1]);

  const auto fm = synth.dataset.to_feature_matrix();
  const auto pa = epx::predict_epx(a, fm);
  const auto pb = epx::predict_epx(b, fm);
  for (std::size_t i = 0; i < pa.size(); ++i) CHECK(pa[i] == doctest::Approx(pb[i]).epsilon(1e-15));
}

TEST_CASE("save / load round-trip preserves predictions") {
  const auto synth = two_mechanism_synth(13);
  epx::ForestConfig config;
  config.n_trees = 50;
  config.seed = 31;
  const auto model =
      epx::fit_epx(synth.dataset, {synth.informative_blocks[0], synth.informative_blocks[1]}, config);

  const auto path = fs::temp_directory_path() / "epx_model_roundtrip.json";
  epx::save_model(model, path.string());
  const auto reloaded = epx::load_model(path.string());

  // 100 random probe rows
  epx::Rng rng(17);
  epx::FeatureMatrix fm;
  fm.n_rows = 100;
  fm.n_cols = synth.dataset.n_vars();
  fm.values.resize(static_cast<std::size_t>(fm.n_rows) * fm.n_cols);
  for (auto& v : fm.values) v = rng.bernoulli(0.3) ? 1.0 : 0.0;

  const auto before = epx::predict_epx(model, fm);
  const auto after = epx::predict_epx(reloaded, fm);
  CHECK(before == after);
  CHECK(reloaded.phalanxes == model.phalanxes);

  // and a bit-identical re-fit serializes identically
  const auto model2 =
      epx::fit_epx(synth.dataset, {synth.informative_blocks[0], synth.informative_blocks[1]}, config);
  CHECK(epx::model_to_json(model) == epx::model_to_json(model2));
  fs::remove(path);
}

TEST_CASE("truncated model files and version bumps are refused") {
  const auto synth = two_mechanism_synth(15);
  epx::ForestConfig config;
  config.n_trees = 10;
  config.seed = 2;
  const auto model = epx::fit_epx(synth.dataset, {synth.informative_blocks[0]}, config);
  const std::string text = epx::model_to_json(model);

  CHECK_THROWS_AS(epx::model_from_json(text.substr(0, text.size() / 2), "truncated"), epx::IoError);

  std::string bumped = text;
  const auto pos = bumped.find("\"version\": 1");
  REQUIRE(pos != std::string::npos);
  bumped.replace(pos, 12, "\"version\": 9");
  CHECK_THROWS_WITH_AS(epx::model_from_json(bumped, "bumped"), doctest::Contains("version"),
                       epx::IoError);

  CHECK_THROWS_AS(epx::model_from_json("{\"format\": \"something-else\"}", "other"), epx::IoError);
}

TEST_CASE("fit_epx validates phalanx disjointness and indices") {
  const auto synth = two_mechanism_synth(17);
  epx::ForestConfig config;
  config.n_trees = 5;
  CHECK_THROWS_AS(epx::fit_epx(synth.dataset, {}, config), epx::DataError);
  CHECK_THROWS_AS(epx::fit_epx(synth.dataset, {{0, 1}, {1, 2}}, config), epx::DataError);
  CHECK_THROWS_AS(epx::fit_epx(synth.dataset, {{0}, {synth.dataset.n_vars()}}, config), epx::DataError);
}

TEST_CASE("two-mechanism data: the ensemble sees both mechanisms, members see one") {
  int ensemble_at_least_max = 0;
  const int runs = 20;
  for (int seed = 0; seed < runs; ++seed) {
    const auto synth = two_mechanism_synth(9000 + seed, 300);
    // held-out split: fold 0 of 3 as test
    const auto folds = epx::balanced_folds(synth.dataset.labels(), 3, 77 + seed);
    std::vector<int> train_rows;
    std::vector<int> test_rows;
    for (int i = 0; i < synth.dataset.n_obs(); ++i) {
      (folds.fold_of[i] == 0 ? test_rows : train_rows).push_back(i);
    }
    const auto train = synth.dataset.subset_rows(train_rows);
    const auto test = synth.dataset.rows_to_feature_matrix(test_rows);
    std::vector<int> test_labels;
    for (int r : test_rows) test_labels.push_back(synth.dataset.labels()[r]);

    epx::ForestConfig config;
    config.n_trees = 120;
    config.seed = 500 + seed;
    const auto model =
        epx::fit_epx(train, {synth.informative_blocks[0], synth.informative_blocks[1]}, config);
    const double ensemble_avep = epx::ave_p(epx::predict_epx(model, test), test_labels);
    double best_member = 0;
    for (const auto& member : epx::predict_members(model, test)) {
      best_member = std::max(best_member, epx::ave_p(member, test_labels));
    }
    ensemble_at_least_max += (ensemble_avep >= best_member);
  }
  CHECK(ensemble_at_least_max > runs / 2);
}

TEST_SUITE_END();
