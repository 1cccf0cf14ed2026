#include "epx/ensemble.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace epx {

using ordered_json = nlohmann::ordered_json;

EpxModel fit_epx(const Dataset& dataset, const std::vector<std::vector<int>>& phalanxes,
                 const ForestConfig& config, const std::string& formation_ref) {
  if (phalanxes.empty()) throw DataError("fit_epx: no phalanxes");
  std::set<int> seen;
  for (const auto& px : phalanxes) {
    if (px.empty()) throw DataError("fit_epx: empty phalanx");
    for (int v : px) {
      if (v < 0 || v >= dataset.n_vars()) throw DataError("fit_epx: variable index out of range");
      if (!seen.insert(v).second) throw DataError("fit_epx: phalanxes are not disjoint");
    }
  }

  EpxModel model;
  model.phalanxes = phalanxes;
  model.columns = dataset.columns();
  model.n_train_obs = dataset.n_obs();
  model.train_prevalence = dataset.prevalence();
  model.config = config;
  model.formation_ref = formation_ref;
  model.forests.resize(phalanxes.size());
  for (std::size_t k = 0; k < phalanxes.size(); ++k) {
    ForestConfig member = config;
    member.seed = mix64(config.seed, k);
    model.forests[k] = fit(dataset, phalanxes[k], member);
  }
  return model;
}

std::vector<double> predict_epx(const EpxModel& model, const FeatureMatrix& features) {
  std::vector<double> probs(features.n_rows, 0.0);
  for (const Forest& forest : model.forests) {
    const auto member = predict_proba(forest, features);
    for (int r = 0; r < features.n_rows; ++r) probs[r] += member[r];
  }
  for (double& p : probs) p /= static_cast<double>(model.forests.size());
  return probs;
}

std::vector<std::vector<double>> predict_members(const EpxModel& model, const FeatureMatrix& features) {
  std::vector<std::vector<double>> out(model.forests.size());
  for (std::size_t k = 0; k < model.forests.size(); ++k) {
    out[k] = predict_proba(model.forests[k], features);
  }
  return out;
}

// --- serialization -----------------------------------------------------------

namespace {

ordered_json tree_to_json(const Tree& tree) {
  ordered_json nodes = ordered_json::array();
  for (const TreeNode& n : tree.nodes) {
    nodes.push_back({n.feature, n.threshold, n.left, n.right, n.n0, n.n1});
  }
  return nodes;
}

Tree tree_from_json(const ordered_json& nodes, const std::string& context) {
  Tree tree;
  tree.nodes.reserve(nodes.size());
  for (const auto& n : nodes) {
    if (!n.is_array() || n.size() != 6) throw IoError(context + ": malformed tree node");
    TreeNode node;
    node.feature = n[0].get<int>();
    node.threshold = n[1].get<double>();
    node.left = n[2].get<int>();
    node.right = n[3].get<int>();
    node.n0 = n[4].get<std::uint32_t>();
    node.n1 = n[5].get<std::uint32_t>();
    tree.nodes.push_back(node);
  }
  if (tree.nodes.empty()) throw IoError(context + ": empty tree");
  return tree;
}

ordered_json forest_to_json(const Forest& forest) {
  ordered_json j;
  j["n_trees"] = forest.config.n_trees;
  j["mtry"] = forest.config.mtry;
  j["min_node_size"] = forest.config.min_node_size;
  j["seed"] = forest.config.seed;
  j["variable_subset"] = forest.variable_subset;
  j["n_train_obs"] = forest.n_train_obs;
  j["train_prevalence"] = forest.train_prevalence;
  ordered_json trees = ordered_json::array();
  for (const Tree& t : forest.trees) trees.push_back(tree_to_json(t));
  j["trees"] = std::move(trees);
  return j;
}

Forest forest_from_json(const ordered_json& j, const std::string& context) {
  Forest forest;
  forest.config.n_trees = j.at("n_trees").get<int>();
  forest.config.mtry = j.at("mtry").get<int>();
  forest.config.min_node_size = j.at("min_node_size").get<int>();
  forest.config.seed = j.at("seed").get<std::uint64_t>();
  forest.variable_subset = j.at("variable_subset").get<std::vector<int>>();
  forest.n_train_obs = j.at("n_train_obs").get<int>();
  forest.train_prevalence = j.at("train_prevalence").get<double>();
  for (const auto& t : j.at("trees")) forest.trees.push_back(tree_from_json(t, context));
  // The in-bag record is training-time state and is not persisted.
  return forest;
}

}  // namespace

std::string model_to_json(const EpxModel& model) {
  ordered_json j;
  j["format"] = "epx-model";
  j["version"] = EpxModel::kFormatVersion;
  ordered_json columns = ordered_json::array();
  for (const auto& meta : model.columns) {
    columns.push_back({{"name", meta.name},
                       {"kind", meta.kind == VarKind::Binary ? "binary" : "continuous"}});
  }
  j["columns"] = std::move(columns);
  ordered_json phalanxes = ordered_json::array();
  for (const auto& px : model.phalanxes) {
    ordered_json names = ordered_json::array();
    for (int v : px) names.push_back(model.columns[v].name);
    phalanxes.push_back(std::move(names));
  }
  j["phalanxes"] = std::move(phalanxes);
  j["n_train_obs"] = model.n_train_obs;
  j["train_prevalence"] = model.train_prevalence;
  j["trees_per_forest"] = model.config.n_trees;
  j["seed"] = model.config.seed;
  j["formation_ref"] = model.formation_ref;
  ordered_json forests = ordered_json::array();
  for (const Forest& f : model.forests) forests.push_back(forest_to_json(f));
  j["forests"] = std::move(forests);
  return j.dump(1, '\t') + "\n";
}

EpxModel model_from_json(const std::string& text, const std::string& context) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw IoError(context + ": parse error: " + e.what());
  }
  try {
    if (j.value("format", "") != "epx-model") {
      throw IoError(context + ": not an epx model file");
    }
    const int version = j.at("version").get<int>();
    if (version != EpxModel::kFormatVersion) {
      throw IoError(context + ": unsupported model version " + std::to_string(version) +
                    " (this build reads version " + std::to_string(EpxModel::kFormatVersion) + ")");
    }
    EpxModel model;
    for (const auto& c : j.at("columns")) {
      VariableMeta meta;
      meta.name = c.at("name").get<std::string>();
      meta.kind = c.at("kind").get<std::string>() == "binary" ? VarKind::Binary : VarKind::Continuous;
      meta.original_index = static_cast<int>(model.columns.size());
      model.columns.push_back(std::move(meta));
    }
    auto column_index = [&model, &context](const std::string& name) {
      for (std::size_t i = 0; i < model.columns.size(); ++i) {
        if (model.columns[i].name == name) return static_cast<int>(i);
      }
      throw IoError(context + ": phalanx references unknown column '" + name + "'");
    };
    for (const auto& px : j.at("phalanxes")) {
      std::vector<int> indices;
      for (const auto& name : px) indices.push_back(column_index(name.get<std::string>()));
      model.phalanxes.push_back(std::move(indices));
    }
    model.n_train_obs = j.at("n_train_obs").get<int>();
    model.train_prevalence = j.at("train_prevalence").get<double>();
    model.config.n_trees = j.at("trees_per_forest").get<int>();
    model.config.seed = j.at("seed").get<std::uint64_t>();
    model.formation_ref = j.value("formation_ref", "");
    for (const auto& f : j.at("forests")) model.forests.push_back(forest_from_json(f, context));
    if (model.forests.size() != model.phalanxes.size() || model.forests.empty()) {
      throw IoError(context + ": forest/phalanx count mismatch");
    }
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(context + ": malformed model file: " + e.what());
  }
}

void save_model(const EpxModel& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write file: " + path);
  out << model_to_json(model);
  if (!out) throw IoError("write failed: " + path);
}

EpxModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open file: " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return model_from_json(buffer.str(), path);
}

}  // namespace epx
