// epx: ensemble-of-phalanxes classifier for rare-class ranking.
//
// Subcommands: synth, null, form, fit, rank, cv, cluster-groups, diversity,
// plot-hits. Every run prints its effective configuration to stderr; primary
// outputs are plain CSV / JSON files that are byte-identical for identical
// seeds, regardless of --threads.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "epx/csv.hpp"
#include "epx/cv.hpp"
#include "epx/dataset.hpp"
#include "epx/ensemble.hpp"
#include "epx/formation.hpp"
#include "epx/grouping.hpp"
#include "epx/metrics.hpp"
#include "epx/svg.hpp"

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitIo = 2;
constexpr int kExitData = 3;
constexpr int kExitInternal = 4;

int default_threads() {
  if (const char* env = std::getenv("EPX_THREADS")) {
    const int v = std::atoi(env);
    if (v >= 1) return v;
  }
  return 1;
}

struct CommonData {
  std::string data_path;
  std::string label_column = "y";
  std::string kinds_path;

  void attach(CLI::App* cmd) {
    cmd->add_option("--data", data_path, "dataset CSV (header row of variable names)")->required();
    cmd->add_option("--label", label_column, "label column name")->capture_default_str();
    cmd->add_option("--kinds", kinds_path, "optional name,kind sidecar pinning column kinds");
  }

  epx::Dataset load(ordered_json& manifest) const {
    epx::LoadOptions options;
    options.label_column = label_column;
    options.kinds_path = kinds_path;
    epx::LoadReport report;
    epx::Dataset dataset = epx::load_csv(data_path, options, &report);
    for (const auto& name : report.dropped_constant_columns) {
      std::cerr << "[epx] dropped constant column: " << name << "\n";
    }
    manifest["data"] = data_path;
    manifest["label"] = label_column;
    if (!kinds_path.empty()) manifest["kinds"] = kinds_path;
    manifest["n_obs"] = dataset.n_obs();
    manifest["n_active"] = dataset.n_active();
    manifest["n_vars"] = dataset.n_vars();
    if (!report.dropped_constant_columns.empty()) {
      manifest["dropped_constant_columns"] = report.dropped_constant_columns;
    }
    return dataset;
  }
};

void log_config(const std::string& subcommand, const ordered_json& manifest, int threads) {
  std::cerr << "[epx] " << subcommand << " threads=" << threads;
  for (const auto& [key, value] : manifest.items()) {
    std::cerr << ' ' << key << '=' << (value.is_string() ? value.get<std::string>() : value.dump());
  }
  std::cerr << "\n";
}

// The manifest records everything needed to reproduce the run. The thread
// count is deliberately absent: results do not depend on it, and the file
// must be byte-identical across --threads settings.
void write_manifest(const fs::path& dir, const std::string& subcommand, const ordered_json& config) {
  ordered_json manifest;
  manifest["tool"] = "epx";
  manifest["subcommand"] = subcommand;
  manifest["config"] = config;
  std::ofstream out(dir / "manifest.json");
  if (!out) throw epx::IoError("cannot write manifest in " + dir.string());
  out << manifest.dump(1, '\t') << "\n";
}

fs::path ensure_out_dir(const std::string& out) {
  fs::path dir(out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw epx::IoError("cannot create output directory " + out + ": " + ec.message());
  return dir;
}

std::string join_names(const std::vector<int>& columns, const epx::Dataset& dataset) {
  std::string out;
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (i) out += ';';
    out += dataset.columns()[columns[i]].name;
  }
  return out;
}

std::string fmt(double v) { return epx::format_double(v); }

// --- synth ------------------------------------------------------------------

struct SynthCmd {
  epx::SynthSpec spec;
  std::uint64_t seed = 0;
  std::string out;

  void attach(CLI::App& app) {
    auto* cmd = app.add_subcommand("synth", "generate a planted-signal synthetic dataset");
    cmd->add_option("--n-obs", spec.n_obs)->capture_default_str();
    cmd->add_option("--active-frac", spec.active_fraction)->capture_default_str();
    cmd->add_option("--blocks", spec.n_blocks, "informative variable blocks")->capture_default_str();
    cmd->add_option("--block-size", spec.block_size)->capture_default_str();
    cmd->add_option("--noise-groups", spec.n_noise_groups)->capture_default_str();
    cmd->add_option("--noise-group-size", spec.noise_group_size)->capture_default_str();
    cmd->add_option("--strength", spec.effect_strength, "per-block effect strength in [0,1]")
        ->capture_default_str();
    cmd->add_option("--background", spec.background_rate, "off-mechanism bit rate")->capture_default_str();
    cmd->add_option("--seed", seed, "run seed")->required();
    cmd->add_option("--out", out, "output directory")->required();
    cmd->callback([this] { run(); });
  }

  void run() const {
    const fs::path dir = ensure_out_dir(out);
    const epx::SynthDataset synth = epx::synth_generate(spec, seed);

    epx::save_csv(synth.dataset, (dir / "data.csv").string(), "y", (dir / "kinds.csv").string());

    ordered_json truth;
    ordered_json blocks = ordered_json::array();
    for (const auto& block : synth.informative_blocks) {
      ordered_json names = ordered_json::array();
      for (int c : block) names.push_back(synth.dataset.columns()[c].name);
      blocks.push_back(std::move(names));
    }
    truth["blocks"] = std::move(blocks);
    truth["mechanism"] = synth.mechanism;
    std::ofstream tf(dir / "truth.json");
    tf << truth.dump(1, '\t') << "\n";

    ordered_json config;
    config["n_obs"] = spec.n_obs;
    config["active_frac"] = spec.active_fraction;
    config["blocks"] = spec.n_blocks;
    config["block_size"] = spec.block_size;
    config["noise_groups"] = spec.n_noise_groups;
    config["noise_group_size"] = spec.noise_group_size;
    config["strength"] = spec.effect_strength;
    config["background"] = spec.background_rate;
    config["seed"] = seed;
    log_config("synth", config, 1);
    write_manifest(dir, "synth", config);
  }
};

// --- null -------------------------------------------------------------------

struct NullCmd {
  int n_obs = 0;
  int n_active = 0;
  int b = 1000;
  double alpha = 0.95;
  std::uint64_t seed = 0;
  int threads = default_threads();
  std::string out;
  std::string samples_out;

  void attach(CLI::App& app) {
    auto* cmd = app.add_subcommand("null", "AveP reference distribution under random ranking");
    cmd->add_option("--n", n_obs, "number of observations")->required();
    cmd->add_option("--m", n_active, "number of actives")->required();
    cmd->add_option("--b", b, "permutation repeats")->capture_default_str();
    cmd->add_option("--alpha", alpha, "screening quantile level")->capture_default_str();
    cmd->add_option("--seed", seed, "run seed")->required();
    cmd->add_option("--threads", threads, "worker threads");
    cmd->add_option("--out", out, "summary CSV path (default: stdout)");
    cmd->add_option("--samples-out", samples_out, "optional CSV of all B samples");
    cmd->callback([this] { run(); });
  }

  void run() const {
    ordered_json config{{"n", n_obs}, {"m", n_active}, {"b", b}, {"alpha", alpha}, {"seed", seed}};
    log_config("null", config, threads);
    const epx::NullCalibration calib = epx::null_calibration(n_obs, n_active, b, alpha, seed, threads);

    epx::CsvTable summary;
    summary.header = {"n_obs", "n_active", "b", "alpha", "seed", "a_median", "a_quantile"};
    summary.rows.push_back({std::to_string(n_obs), std::to_string(n_active), std::to_string(b),
                            fmt(alpha), std::to_string(seed), fmt(calib.a_median),
                            fmt(calib.a_quantile)});
    if (out.empty()) {
      std::cout << "n_obs,n_active,b,alpha,seed,a_median,a_quantile\n";
      const auto& r = summary.rows[0];
      for (std::size_t i = 0; i < r.size(); ++i) std::cout << (i ? "," : "") << r[i];
      std::cout << "\n";
    } else {
      epx::write_csv(out, summary);
    }
    if (!samples_out.empty()) {
      epx::CsvTable samples;
      samples.header = {"sample", "avep"};
      for (std::size_t i = 0; i < calib.samples.size(); ++i) {
        samples.rows.push_back({std::to_string(i), fmt(calib.samples[i])});
      }
      epx::write_csv(samples_out, samples);
    }
  }
};

// --- form -------------------------------------------------------------------

struct FormCmd {
  CommonData data;
  std::string grouping = "auto";
  std::string groups_file;
  int clusters_k = 0;
  std::string ward_variant = "ward";
  epx::FormationConfig formation;
  std::uint64_t seed = 0;
  int threads = default_threads();
  std::string out;

  void attach(CLI::App& app) {
    auto* cmd = app.add_subcommand("form", "run the phalanx-formation search");
    data.attach(cmd);
    cmd->add_option("--grouping", grouping, "initial grouping: auto|names|singletons|clusters|explicit")
        ->capture_default_str();
    cmd->add_option("--groups-file", groups_file, "grouping file for --grouping explicit");
    cmd->add_option("--clusters-k", clusters_k, "cluster count for --grouping clusters (0 = name count)");
    cmd->add_option("--ward", ward_variant, "ward|ward2 clustering variant")->capture_default_str();
    cmd->add_option("--alpha", formation.alpha)->capture_default_str();
    cmd->add_option("--permutations", formation.permutations)->capture_default_str();
    cmd->add_option("--formation-trees", formation.formation_trees)->capture_default_str();
    cmd->add_option("--seed", seed, "run seed")->required();
    cmd->add_option("--threads", threads, "worker threads");
    cmd->add_option("--out", out, "output directory")->required();
    cmd->callback([this] { run(); });
  }

  epx::GroupingPlan make_plan(const epx::Dataset& dataset) const {
    if (grouping == "auto") return epx::default_grouping(dataset);
    if (grouping == "names") return epx::group_by_names(dataset);
    if (grouping == "singletons") return epx::singleton_groups(dataset);
    if (grouping == "clusters") {
      int k = clusters_k;
      if (k == 0) {
        // Paper default: as many clusters as name-based groups (binary columns only).
        const auto name_plan = epx::group_by_names(dataset);
        int binary_groups = 0;
        for (const auto& g : name_plan.groups) {
          if (dataset.columns()[g.front()].kind == epx::VarKind::Binary) ++binary_groups;
        }
        k = std::max(1, binary_groups);
      }
      return epx::cluster_groups(dataset, k,
                                 ward_variant == "ward2" ? epx::WardVariant::D2 : epx::WardVariant::D,
                                 threads);
    }
    if (grouping == "explicit") {
      if (groups_file.empty()) throw epx::DataError("--grouping explicit needs --groups-file");
      return epx::read_grouping_file(groups_file, dataset);
    }
    throw epx::DataError("unknown grouping mode: " + grouping);
  }

  void run() {
    const fs::path dir = ensure_out_dir(out);
    ordered_json config;
    const epx::Dataset dataset = data.load(config);
    const epx::GroupingPlan plan = make_plan(dataset);
    config["grouping"] = grouping;
    if (!groups_file.empty()) config["groups_file"] = groups_file;
    config["initial_groups"] = plan.group_count();
    config["alpha"] = formation.alpha;
    config["permutations"] = formation.permutations;
    config["formation_trees"] = formation.formation_trees;
    config["seed"] = seed;
    log_config("form", config, threads);

    formation.seed = seed;
    formation.threads = threads;
    const epx::FormationResult result = epx::form_phalanxes(dataset, plan, formation);

    // phalanx membership file, consumed by `epx fit`
    epx::GroupingPlan phalanx_plan;
    phalanx_plan.groups = result.phalanxes;
    epx::write_grouping_file((dir / "phalanxes.txt").string(), phalanx_plan, dataset);

    epx::CsvTable calib;
    calib.header = {"n_obs", "n_active", "b", "alpha", "seed", "a_median", "a_quantile"};
    calib.rows.push_back({std::to_string(result.calibration.n_obs),
                          std::to_string(result.calibration.n_active),
                          std::to_string(result.calibration.samples.size()), fmt(result.calibration.alpha),
                          std::to_string(result.calibration.seed), fmt(result.calibration.a_median),
                          fmt(result.calibration.a_quantile)});
    epx::write_csv((dir / "calibration.csv").string(), calib);

    epx::CsvTable screening;
    screening.header = {"group", "a_solo", "pass_solo", "pass_single_model", "witness_single",
                        "pass_ensemble", "witness_ensemble", "survived"};
    for (const auto& g : result.screening.groups) {
      screening.rows.push_back({join_names(g.group, dataset), fmt(g.a_solo),
                                std::to_string(g.pass_solo), std::to_string(g.pass_single_model),
                                std::to_string(g.witness_single), std::to_string(g.pass_ensemble),
                                std::to_string(g.witness_ensemble), std::to_string(g.survived)});
    }
    epx::write_csv((dir / "screening.csv").string(), screening);

    epx::CsvTable pairs;
    pairs.header = {"i", "j", "a_union", "a_ensemble"};
    const int d = static_cast<int>(result.screening.groups.size());
    for (int i = 0; i < d; ++i) {
      for (int j = i + 1; j < d; ++j) {
        pairs.rows.push_back({std::to_string(i), std::to_string(j), fmt(result.screening.pair(i, j)),
                              fmt(result.screening.pair_ensemble(i, j))});
      }
    }
    epx::write_csv((dir / "screening_pairs.csv").string(), pairs);

    epx::CsvTable trace;
    trace.header = {"step", "left", "right", "a_union", "a_ensemble", "ratio"};
    for (std::size_t e = 0; e < result.merge_trace.events.size(); ++e) {
      const auto& event = result.merge_trace.events[e];
      trace.rows.push_back({std::to_string(e), join_names(event.left, dataset),
                            join_names(event.right, dataset), fmt(event.a_union),
                            fmt(event.a_ensemble), fmt(event.ratio)});
    }
    epx::write_csv((dir / "merge_trace.csv").string(), trace);

    epx::CsvTable ratios;
    ratios.header = {"i", "j", "ratio"};
    const int c = static_cast<int>(result.merge_trace.final_groups.size());
    if (!result.merge_trace.final_ratios.empty()) {
      for (int i = 0; i < c; ++i) {
        for (int j = i + 1; j < c; ++j) {
          ratios.rows.push_back({std::to_string(i), std::to_string(j),
                                 fmt(result.merge_trace.final_ratios[static_cast<std::size_t>(i) * c + j])});
        }
      }
    }
    epx::write_csv((dir / "final_ratios.csv").string(), ratios);

    epx::CsvTable phalanx_screen;
    phalanx_screen.header = {"candidate", "a_solo", "pass_solo", "pass_ensemble", "witness_ensemble",
                             "kept"};
    for (const auto& r : result.phalanx_screening.candidates) {
      phalanx_screen.rows.push_back({join_names(r.candidate, dataset), fmt(r.a_solo),
                                     std::to_string(r.pass_solo), std::to_string(r.pass_ensemble),
                                     std::to_string(r.witness_ensemble), std::to_string(r.kept)});
    }
    epx::write_csv((dir / "phalanx_screening.csv").string(), phalanx_screen);

    config["fit_count"] = result.fit_count;
    config["phalanx_count"] = result.phalanxes.size();
    write_manifest(dir, "form", config);
    std::cerr << "[epx] formed " << result.phalanxes.size() << " phalanx(es) with "
              << result.fit_count << " evaluator fits\n";
  }
};

// --- fit ----------------------------------------------------------------------

struct FitCmd {
  CommonData data;
  std::string phalanx_file;
  int trees = 500;
  std::uint64_t seed = 0;
  int threads = default_threads();
  std::string out;

  void attach(CLI::App& app) {
    auto* cmd = app.add_subcommand("fit", "fit the final ensemble from a phalanx file");
    data.attach(cmd);
    cmd->add_option("--phalanxes", phalanx_file, "phalanx membership file (from `epx form`)")
        ->required();
    cmd->add_option("--trees", trees, "trees per member forest")->capture_default_str();
    cmd->add_option("--seed", seed, "run seed")->required();
    cmd->add_option("--threads", threads, "worker threads");
    cmd->add_option("--out", out, "model file path")->required();
    cmd->callback([this] { run(); });
  }

  void run() const {
    ordered_json config;
    const epx::Dataset dataset = data.load(config);
    const epx::GroupingPlan plan = epx::read_grouping_file(phalanx_file, dataset);
    config["phalanxes"] = phalanx_file;
    config["trees"] = trees;
    config["seed"] = seed;
    log_config("fit", config, threads);

    epx::ForestConfig forest_config;
    forest_config.n_trees = trees;
    forest_config.seed = seed;
    forest_config.threads = threads;
    const epx::EpxModel model = epx::fit_epx(dataset, plan.groups, forest_config, phalanx_file);
    epx::save_model(model, out);
    std::cerr << "[epx] wrote model with " << model.member_count() << " member forest(s) to " << out
              << "\n";
  }
};

// --- rank ---------------------------------------------------------------------

struct RankCmd {
  std::string model_path;
  std::string data_path;
  std::string id_column;
  std::string out;

  void attach(CLI::App& app) {
    auto* cmd = app.add_subcommand("rank", "rank rows of a feature CSV with a saved model");
    cmd->add_option("--model", model_path, "model file from `epx fit`")->required();
    cmd->add_option("--data", data_path, "feature CSV; columns matched to the model by name")
        ->required();
    cmd->add_option("--id-col", id_column, "identifier column (default: 1-based row number)");
    cmd->add_option("--out", out, "output CSV (default: stdout)");
    cmd->callback([this] { run(); });
  }

  void run() const {
    ordered_json config{{"model", model_path}, {"data", data_path}};
    log_config("rank", config, 1);
    const epx::EpxModel model = epx::load_model(model_path);
    const epx::CsvTable table = epx::read_csv(data_path);

    // Model variables are looked up by name; extra CSV columns are ignored.
    std::vector<int> source(model.columns.size());
    for (std::size_t c = 0; c < model.columns.size(); ++c) {
      const int idx = table.column_index(model.columns[c].name);
      if (idx < 0) {
        throw epx::DataError(data_path + ": missing model variable '" + model.columns[c].name + "'");
      }
      source[c] = idx;
    }
    int id_idx = -1;
    if (!id_column.empty()) {
      id_idx = table.column_index(id_column);
      if (id_idx < 0) throw epx::DataError(data_path + ": no id column '" + id_column + "'");
    }

    epx::FeatureMatrix fm;
    fm.n_rows = static_cast<int>(table.rows.size());
    fm.n_cols = static_cast<int>(model.columns.size());
    fm.values.resize(static_cast<std::size_t>(fm.n_rows) * fm.n_cols);
    for (int r = 0; r < fm.n_rows; ++r) {
      for (int c = 0; c < fm.n_cols; ++c) {
        fm.values[static_cast<std::size_t>(r) * fm.n_cols + c] =
            epx::parse_double(table.rows[r][source[c]], data_path + " row " + std::to_string(r + 2));
      }
    }

    const std::vector<double> probs = epx::predict_epx(model, fm);
    const std::vector<double> ranks = epx::fractional_ranks(probs);
    std::vector<int> order(fm.n_rows);
    for (int i = 0; i < fm.n_rows; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return probs[a] > probs[b]; });

    epx::CsvTable result;
    result.header = {"id", "score", "rank"};
    for (int i : order) {
      const std::string id = id_idx >= 0 ? table.rows[i][id_idx] : std::to_string(i + 1);
      result.rows.push_back({id, fmt(probs[i]), fmt(ranks[i])});
    }
    if (out.empty()) {
      std::cout << "id,score,rank\n";
      for (const auto& row : result.rows) std::cout << row[0] << ',' << row[1] << ',' << row[2] << "\n";
    } else {
      epx::write_csv(out, result);
    }
  }
};

// --- cv -----------------------------------------------------------------------

struct CvCmd {
  CommonData data;
  std::string pipeline = "epx";
  std::string phalanx_file;
  int trees = 500;
  int k = 10;
  int repeats = 16;
  int ie_shortlist = 0;
  bool with_baseline = false;
  double alpha = 0.95;
  int permutations = 1000;
  int formation_trees = 150;
  std::uint64_t seed = 0;
  int threads = default_threads();
  std::string out;

  void attach(CLI::App& app) {
    auto* cmd = app.add_subcommand("cv", "repeated balanced k-fold cross-validation");
    data.attach(cmd);
    cmd->add_option("--pipeline", pipeline, "epx|epx-reform|forest")->capture_default_str();
    cmd->add_option("--phalanxes", phalanx_file, "phalanx file (pipeline epx)");
    cmd->add_option("--trees", trees, "trees per forest")->capture_default_str();
    cmd->add_option("--k", k, "folds")->capture_default_str();
    cmd->add_option("--repeats", repeats)->capture_default_str();
    cmd->add_option("--ie-n", ie_shortlist, "IE shortlist size (0 = min(300, N))");
    cmd->add_flag("--baseline", with_baseline, "also run an all-variables forest for comparison");
    cmd->add_option("--alpha", alpha, "formation alpha (pipeline epx-reform)")->capture_default_str();
    cmd->add_option("--permutations", permutations, "formation permutations (epx-reform)")
        ->capture_default_str();
    cmd->add_option("--formation-trees", formation_trees, "formation trees (epx-reform)")
        ->capture_default_str();
    cmd->add_option("--seed", seed, "run seed")->required();
    cmd->add_option("--threads", threads, "worker threads");
    cmd->add_option("--out", out, "output directory")->required();
    cmd->callback([this] { run(); });
  }

  void run() const {
    const fs::path dir = ensure_out_dir(out);
    ordered_json config;
    const epx::Dataset dataset = data.load(config);

    epx::PipelineSpec spec;
    spec.forest.n_trees = trees;
    if (pipeline == "forest") {
      spec.kind = epx::PipelineSpec::Kind::PlainForest;
    } else if (pipeline == "epx") {
      if (phalanx_file.empty()) throw epx::DataError("pipeline epx needs --phalanxes");
      spec.kind = epx::PipelineSpec::Kind::EpxFixed;
      spec.phalanxes = epx::read_grouping_file(phalanx_file, dataset).groups;
    } else if (pipeline == "epx-reform") {
      spec.kind = epx::PipelineSpec::Kind::EpxReform;
      spec.formation.alpha = alpha;
      spec.formation.permutations = permutations;
      spec.formation.formation_trees = formation_trees;
    } else {
      throw epx::DataError("unknown pipeline: " + pipeline);
    }

    config["pipeline"] = pipeline;
    if (!phalanx_file.empty()) config["phalanxes"] = phalanx_file;
    config["trees"] = trees;
    config["k"] = k;
    config["repeats"] = repeats;
    config["baseline"] = with_baseline;
    config["seed"] = seed;
    log_config("cv", config, threads);

    epx::CvConfig cv_config;
    cv_config.k = k;
    cv_config.repeats = repeats;
    cv_config.seed = seed;
    cv_config.ie_shortlist = ie_shortlist;
    cv_config.threads = threads;

    epx::CsvTable table;
    if (with_baseline) {
      epx::PipelineSpec base;
      base.kind = epx::PipelineSpec::Kind::PlainForest;
      base.forest.n_trees = trees;
      const epx::CvComparison cmp = epx::compare_pipelines(dataset, spec, base, cv_config);
      table.header = {"repeat", "avep", "ie", "baseline_avep", "baseline_ie", "wins"};
      double mean_a = 0;
      double mean_i = 0;
      double mean_ba = 0;
      double mean_bi = 0;
      for (int r = 0; r < repeats; ++r) {
        table.rows.push_back({std::to_string(r), fmt(cmp.main.avep[r]), fmt(cmp.main.ie[r]),
                              fmt(cmp.baseline.avep[r]), fmt(cmp.baseline.ie[r]), ""});
        mean_a += cmp.main.avep[r];
        mean_i += cmp.main.ie[r];
        mean_ba += cmp.baseline.avep[r];
        mean_bi += cmp.baseline.ie[r];
      }
      table.rows.push_back({"summary", fmt(mean_a / repeats), fmt(mean_i / repeats),
                            fmt(mean_ba / repeats), fmt(mean_bi / repeats),
                            std::to_string(cmp.main_wins) + "/" + std::to_string(repeats)});
    } else {
      const epx::CvResult result = epx::cross_validate(dataset, spec, cv_config);
      table.header = {"repeat", "avep", "ie"};
      double mean_a = 0;
      double mean_i = 0;
      for (int r = 0; r < repeats; ++r) {
        table.rows.push_back({std::to_string(r), fmt(result.avep[r]), fmt(result.ie[r])});
        mean_a += result.avep[r];
        mean_i += result.ie[r];
      }
      table.rows.push_back({"summary", fmt(mean_a / repeats), fmt(mean_i / repeats)});
    }
    epx::write_csv((dir / "cv.csv").string(), table);
    write_manifest(dir, "cv", config);
  }
};

// --- cluster-groups -------------------------------------------------------------

struct ClusterCmd {
  CommonData data;
  int k = 0;
  std::string ward_variant = "ward";
  int threads = default_threads();
  std::string out;

  void attach(CLI::App& app) {
    auto* cmd = app.add_subcommand("cluster-groups",
                                   "data-adaptive initial groups via Jaccard/Ward clustering");
    data.attach(cmd);
    cmd->add_option("--k", k, "cluster count (0 = number of name-based groups)")->capture_default_str();
    cmd->add_option("--ward", ward_variant, "ward|ward2")->capture_default_str();
    cmd->add_option("--threads", threads, "worker threads");
    cmd->add_option("--out", out, "grouping file path")->required();
    cmd->callback([this] { run(); });
  }

  void run() const {
    ordered_json config;
    const epx::Dataset dataset = data.load(config);
    int clusters = k;
    if (clusters == 0) {
      const auto name_plan = epx::group_by_names(dataset);
      int binary_groups = 0;
      for (const auto& g : name_plan.groups) {
        if (dataset.columns()[g.front()].kind == epx::VarKind::Binary) ++binary_groups;
      }
      clusters = std::max(1, binary_groups);
    }
    config["k"] = clusters;
    config["ward"] = ward_variant;
    log_config("cluster-groups", config, threads);
    const epx::GroupingPlan plan = epx::cluster_groups(
        dataset, clusters, ward_variant == "ward2" ? epx::WardVariant::D2 : epx::WardVariant::D,
        threads);
    epx::write_grouping_file(out, plan, dataset);
    std::cerr << "[epx] wrote " << plan.group_count() << " groups to " << out << "\n";
  }
};

// --- diversity -------------------------------------------------------------------

struct DiversityCmd {
  CommonData data;
  std::string model_path;
  int k = 10;
  bool with_baseline = false;
  bool svg = false;
  std::uint64_t seed = 0;
  int threads = default_threads();
  std::string out;

  void attach(CLI::App& app) {
    auto* cmd = app.add_subcommand("diversity", "per-phalanx rank map of the active observations");
    data.attach(cmd);
    cmd->add_option("--model", model_path, "model file from `epx fit`")->required();
    cmd->add_option("--k", k, "folds for the underlying cross-validation")->capture_default_str();
    cmd->add_flag("--baseline", with_baseline, "add an all-variables forest column");
    cmd->add_flag("--svg", svg, "also write diversity.svg");
    cmd->add_option("--seed", seed, "run seed")->required();
    cmd->add_option("--threads", threads, "worker threads");
    cmd->add_option("--out", out, "output directory")->required();
    cmd->callback([this] { run(); });
  }

  void run() const {
    const fs::path dir = ensure_out_dir(out);
    ordered_json config;
    const epx::Dataset dataset = data.load(config);
    const epx::EpxModel model = epx::load_model(model_path);
    config["model"] = model_path;
    config["k"] = k;
    config["baseline"] = with_baseline;
    config["seed"] = seed;
    log_config("diversity", config, threads);

    epx::PipelineSpec spec;
    spec.kind = epx::PipelineSpec::Kind::EpxFixed;
    spec.phalanxes = model.phalanxes;
    spec.forest.n_trees = model.config.n_trees;
    epx::CvConfig cv_config;
    cv_config.k = k;
    cv_config.repeats = 1;
    cv_config.seed = seed;
    cv_config.threads = threads;
    const epx::CvResult cv = epx::cross_validate(dataset, spec, cv_config);

    epx::CvResult baseline;
    if (with_baseline) {
      epx::PipelineSpec base;
      base.kind = epx::PipelineSpec::Kind::PlainForest;
      base.forest.n_trees = model.config.n_trees;
      baseline = epx::cross_validate(dataset, base, cv_config);
    }
    const epx::DiversityMap map =
        epx::diversity_map(dataset, model, cv, with_baseline ? &baseline : nullptr);

    epx::CsvTable table;
    table.header = {"observation"};
    for (const auto& name : map.column_names) table.header.push_back(name);
    epx::CsvTable avep_row;
    for (std::size_t row = 0; row < map.active_rows.size(); ++row) {
      std::vector<std::string> cells{std::to_string(map.active_rows[row])};
      for (double rank : map.ranks[row]) cells.push_back(fmt(rank));
      table.rows.push_back(std::move(cells));
    }
    epx::write_csv((dir / "diversity.csv").string(), table);

    epx::CsvTable avep;
    avep.header = {"column", "avep"};
    for (std::size_t c = 0; c < map.column_names.size(); ++c) {
      avep.rows.push_back({map.column_names[c], fmt(map.column_avep[c])});
    }
    epx::write_csv((dir / "column_avep.csv").string(), avep);

    if (svg) epx::write_diversity_svg((dir / "diversity.svg").string(), map, dataset.n_obs());
    write_manifest(dir, "diversity", config);
  }
};

// --- plot-hits ---------------------------------------------------------------------

struct PlotHitsCmd {
  std::string scores_path;
  std::string score_column = "score";
  std::string label_column = "y";
  std::string out;
  std::string svg_path;

  void attach(CLI::App& app) {
    auto* cmd = app.add_subcommand("plot-hits", "hit curve from a CSV of scores and labels");
    cmd->add_option("--scores", scores_path, "CSV with score and label columns")->required();
    cmd->add_option("--score-col", score_column)->capture_default_str();
    cmd->add_option("--label-col", label_column)->capture_default_str();
    cmd->add_option("--out", out, "hit-curve CSV path (default: stdout)");
    cmd->add_option("--svg", svg_path, "optional SVG path");
    cmd->callback([this] { run(); });
  }

  void run() const {
    ordered_json config{{"scores", scores_path}, {"score_col", score_column}, {"label_col", label_column}};
    log_config("plot-hits", config, 1);
    const epx::CsvTable table = epx::read_csv(scores_path);
    const int sc = table.column_index(score_column);
    const int lc = table.column_index(label_column);
    if (sc < 0) throw epx::DataError(scores_path + ": no score column '" + score_column + "'");
    if (lc < 0) throw epx::DataError(scores_path + ": no label column '" + label_column + "'");

    epx::RankedScores ranked;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
      ranked.scores.push_back(epx::parse_double(table.rows[r][sc], "row " + std::to_string(r + 2)));
      const double label = epx::parse_double(table.rows[r][lc], "row " + std::to_string(r + 2));
      if (label != 0.0 && label != 1.0) {
        throw epx::DataError(scores_path + ": label must be 0/1 at row " + std::to_string(r + 2));
      }
      ranked.labels.push_back(static_cast<int>(label));
    }
    const epx::HitCurve curve = epx::hit_curve(ranked);

    epx::CsvTable result;
    result.header = {"n", "hits", "hit_rate"};
    for (int n = 1; n <= curve.n_obs; ++n) {
      result.rows.push_back({std::to_string(n), fmt(curve.hits[n - 1]), fmt(curve.hit_rate(n))});
    }
    if (out.empty()) {
      std::cout << "n,hits,hit_rate\n";
      for (const auto& row : result.rows) std::cout << row[0] << ',' << row[1] << ',' << row[2] << "\n";
    } else {
      epx::write_csv(out, result);
    }
    if (!svg_path.empty()) epx::write_hit_curve_svg(svg_path, curve);
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"epx: ensemble of phalanxes for rare-class ranking"};
  app.require_subcommand(1);
  app.set_config("--config", "", "config file (key = value lines), overridable by flags");

  SynthCmd synth;
  NullCmd null_cmd;
  FormCmd form;
  FitCmd fit;
  RankCmd rank;
  CvCmd cv;
  ClusterCmd cluster;
  DiversityCmd diversity;
  PlotHitsCmd plot_hits;

  synth.attach(app);
  null_cmd.attach(app);
  form.attach(app);
  fit.attach(app);
  rank.attach(app);
  cv.attach(app);
  cluster.attach(app);
  diversity.attach(app);
  plot_hits.attach(app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  } catch (const epx::IoError& e) {
    std::cerr << "[epx] io error: " << e.what() << "\n";
    return kExitIo;
  } catch (const epx::DataError& e) {
    std::cerr << "[epx] data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "[epx] error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitOk;
}
