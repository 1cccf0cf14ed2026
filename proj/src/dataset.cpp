#include "epx/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "epx/csv.hpp"
#include "epx/rng.hpp"

namespace epx {

static bool is_zero_or_one(double v) { return v == 0.0 || v == 1.0; }

Dataset::Dataset(std::vector<int> labels, std::vector<double> values, std::vector<VariableMeta> columns)
    : Dataset(Unchecked{}, std::move(labels), std::move(values), std::move(columns)) {
  if (n_obs_ == 0) throw DataError("dataset has no observations");
  if (values_.size() != static_cast<std::size_t>(n_obs_) * columns_.size()) {
    throw DataError("feature matrix size does not match labels/columns");
  }
  if (n_active_ == 0 || n_active_ == n_obs_) {
    throw DataError("labels must contain both classes (0 and 1)");
  }
  for (int v : labels_) {
    if (v != 0 && v != 1) throw DataError("label values must be 0 or 1");
  }
  std::set<std::string> names;
  for (const auto& meta : columns_) {
    if (meta.name.empty()) throw DataError("empty variable name");
    if (!names.insert(meta.name).second) throw DataError("duplicate variable name: " + meta.name);
  }
  for (int c = 0; c < n_vars(); ++c) {
    auto col = column(c);
    bool constant = true;
    bool binary = true;
    for (double v : col) {
      if (v != col[0]) constant = false;
      if (!is_zero_or_one(v)) binary = false;
    }
    if (constant) throw DataError("constant column: " + columns_[c].name);
    if (columns_[c].kind == VarKind::Binary && !binary) {
      throw DataError("binary column holds values outside {0,1}: " + columns_[c].name);
    }
  }
}

Dataset::Dataset(Unchecked, std::vector<int> labels, std::vector<double> values,
                 std::vector<VariableMeta> columns)
    : n_obs_(static_cast<int>(labels.size())),
      labels_(std::move(labels)),
      values_(std::move(values)),
      columns_(std::move(columns)) {
  n_active_ = 0;
  for (int v : labels_) n_active_ += (v == 1);
}

Dataset Dataset::subset_rows(const std::vector<int>& rows) const {
  std::vector<int> labels(rows.size());
  std::vector<double> values(rows.size() * columns_.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const int r = rows[i];
    if (r < 0 || r >= n_obs_) throw DataError("row index out of range");
    labels[i] = labels_[r];
  }
  for (int c = 0; c < n_vars(); ++c) {
    auto col = column(c);
    double* dst = values.data() + static_cast<std::size_t>(c) * rows.size();
    for (std::size_t i = 0; i < rows.size(); ++i) dst[i] = col[rows[i]];
  }
  return Dataset(Unchecked{}, std::move(labels), std::move(values), columns_);
}

FeatureMatrix Dataset::to_feature_matrix() const {
  std::vector<int> rows(n_obs_);
  for (int i = 0; i < n_obs_; ++i) rows[i] = i;
  return rows_to_feature_matrix(rows);
}

FeatureMatrix Dataset::rows_to_feature_matrix(const std::vector<int>& rows) const {
  FeatureMatrix fm;
  fm.n_rows = static_cast<int>(rows.size());
  fm.n_cols = n_vars();
  fm.values.resize(static_cast<std::size_t>(fm.n_rows) * fm.n_cols);
  for (int i = 0; i < fm.n_rows; ++i) {
    for (int c = 0; c < fm.n_cols; ++c) {
      fm.values[static_cast<std::size_t>(i) * fm.n_cols + c] = at(rows[i], c);
    }
  }
  return fm;
}

int Dataset::column_index(const std::string& name) const {
  for (int c = 0; c < n_vars(); ++c) {
    if (columns_[c].name == name) return c;
  }
  return -1;
}

void GroupingPlan::validate(int n_vars) const {
  if (groups.empty()) throw DataError("grouping plan has no groups");
  std::vector<bool> seen(n_vars, false);
  for (const auto& g : groups) {
    if (g.empty()) throw DataError("grouping plan contains an empty group");
    for (int idx : g) {
      if (idx < 0 || idx >= n_vars) throw DataError("grouping plan index out of range");
      if (seen[idx]) throw DataError("grouping plan groups are not disjoint");
      seen[idx] = true;
    }
  }
}

// --- load / save ------------------------------------------------------------

static std::map<std::string, VarKind> read_kind_hints(const std::string& path) {
  std::map<std::string, VarKind> hints;
  if (path.empty()) return hints;
  CsvTable table = read_csv(path);
  const int name_col = table.column_index("name");
  const int kind_col = table.column_index("kind");
  if (name_col < 0 || kind_col < 0) throw IoError(path + ": kinds file needs name,kind columns");
  for (const auto& row : table.rows) {
    const std::string& kind = row[kind_col];
    if (kind == "binary") {
      hints[row[name_col]] = VarKind::Binary;
    } else if (kind == "continuous") {
      hints[row[name_col]] = VarKind::Continuous;
    } else {
      throw IoError(path + ": unknown kind '" + kind + "'");
    }
  }
  return hints;
}

Dataset load_csv(const std::string& path, const LoadOptions& options, LoadReport* report) {
  CsvTable table = read_csv(path);
  const int label_col = table.column_index(options.label_column);
  if (label_col < 0) throw DataError(path + ": no label column '" + options.label_column + "'");
  const auto hints = read_kind_hints(options.kinds_path);

  const int n_obs = static_cast<int>(table.rows.size());
  if (n_obs == 0) throw DataError(path + ": no data rows");

  std::vector<int> labels(n_obs);
  for (int r = 0; r < n_obs; ++r) {
    const double v = parse_double(table.rows[r][label_col], path + " row " + std::to_string(r + 2));
    if (v != 0.0 && v != 1.0) {
      throw DataError(path + ": label column '" + options.label_column + "' holds value " +
                      table.rows[r][label_col] + " at row " + std::to_string(r + 2));
    }
    labels[r] = static_cast<int>(v);
  }

  std::vector<VariableMeta> columns;
  std::vector<double> values;
  std::vector<std::string> dropped;
  for (int c = 0; c < static_cast<int>(table.header.size()); ++c) {
    if (c == label_col) continue;
    const std::string& name = table.header[c];
    std::vector<double> col(n_obs);
    bool constant = true;
    bool binary = true;
    for (int r = 0; r < n_obs; ++r) {
      col[r] = parse_double(table.rows[r][c], path + " column " + name + " row " + std::to_string(r + 2));
      if (col[r] != col[0]) constant = false;
      if (!is_zero_or_one(col[r])) binary = false;
    }
    if (constant) {
      dropped.push_back(name);
      continue;
    }
    VariableMeta meta;
    meta.name = name;
    meta.original_index = c;
    auto hint = hints.find(name);
    if (hint != hints.end()) {
      meta.kind = hint->second;
      if (meta.kind == VarKind::Binary && !binary) {
        throw DataError(path + ": column " + name + " hinted binary but holds non-{0,1} values");
      }
    } else {
      meta.kind = binary ? VarKind::Binary : VarKind::Continuous;
    }
    columns.push_back(std::move(meta));
    values.insert(values.end(), col.begin(), col.end());
  }
  if (columns.empty()) throw DataError(path + ": all feature columns are constant");
  if (report) report->dropped_constant_columns = std::move(dropped);
  return Dataset(std::move(labels), std::move(values), std::move(columns));
}

void save_csv(const Dataset& dataset, const std::string& path, const std::string& label_column,
              const std::string& kinds_path) {
  CsvTable table;
  table.header.push_back(label_column);
  for (const auto& meta : dataset.columns()) table.header.push_back(meta.name);
  table.rows.resize(dataset.n_obs());
  for (int r = 0; r < dataset.n_obs(); ++r) {
    auto& row = table.rows[r];
    row.reserve(dataset.n_vars() + 1);
    row.push_back(std::to_string(dataset.labels()[r]));
    for (int c = 0; c < dataset.n_vars(); ++c) row.push_back(format_double(dataset.at(r, c)));
  }
  write_csv(path, table);

  if (!kinds_path.empty()) {
    CsvTable kinds;
    kinds.header = {"name", "kind"};
    for (const auto& meta : dataset.columns()) {
      kinds.rows.push_back({meta.name, meta.kind == VarKind::Binary ? "binary" : "continuous"});
    }
    write_csv(kinds_path, kinds);
  }
}

// --- grouping ----------------------------------------------------------------

static std::string name_group_key(const std::string& name) {
  std::string key;
  key.reserve(name.size());
  bool in_digits = false;
  for (char ch : name) {
    if (ch >= '0' && ch <= '9') {
      if (!in_digits) key.push_back('#');
      in_digits = true;
    } else {
      key.push_back(ch);
      in_digits = false;
    }
  }
  return key;
}

GroupingPlan group_by_names(const Dataset& dataset) {
  GroupingPlan plan;
  plan.provenance = GroupProvenance::Names;
  std::map<std::string, int> key_to_group;
  for (int c = 0; c < dataset.n_vars(); ++c) {
    const std::string key = name_group_key(dataset.columns()[c].name);
    auto it = key_to_group.find(key);
    if (it == key_to_group.end()) {
      key_to_group.emplace(key, static_cast<int>(plan.groups.size()));
      plan.groups.push_back({c});
    } else {
      plan.groups[it->second].push_back(c);
    }
  }
  return plan;
}

GroupingPlan singleton_groups(const Dataset& dataset) {
  GroupingPlan plan;
  plan.provenance = GroupProvenance::Singletons;
  plan.groups.reserve(dataset.n_vars());
  for (int c = 0; c < dataset.n_vars(); ++c) plan.groups.push_back({c});
  return plan;
}

GroupingPlan default_grouping(const Dataset& dataset) {
  const bool any_binary = std::any_of(dataset.columns().begin(), dataset.columns().end(),
                                      [](const VariableMeta& m) { return m.kind == VarKind::Binary; });
  return any_binary ? group_by_names(dataset) : singleton_groups(dataset);
}

// --- synthetic data -----------------------------------------------------------

SynthDataset synth_generate(const SynthSpec& spec, std::uint64_t seed) {
  if (spec.n_obs < 2) throw DataError("synth: need at least 2 observations");
  if (spec.n_blocks < 1 || spec.block_size < 1) throw DataError("synth: need at least one informative block");
  if (spec.effect_strength < 0.0 || spec.effect_strength > 1.0) {
    throw DataError("synth: effect strength must be in [0,1]");
  }
  if (spec.background_rate <= 0.0 || spec.background_rate >= 1.0) {
    throw DataError("synth: background rate must be in (0,1)");
  }
  const int n_active = static_cast<int>(spec.active_fraction * spec.n_obs + 0.5);
  if (n_active < 1) throw DataError("synth: rare-class count rounds to zero");
  if (n_active >= spec.n_obs) throw DataError("synth: rare-class fraction too large");

  // Which observations are active, and each active's mechanism.
  std::vector<int> order(spec.n_obs);
  for (int i = 0; i < spec.n_obs; ++i) order[i] = i;
  Rng label_rng(mix64(seed, seed_stream::synth_labels));
  label_rng.shuffle(order);
  std::vector<int> labels(spec.n_obs, 0);
  std::vector<int> mechanism(spec.n_obs, -1);
  for (int a = 0; a < n_active; ++a) {
    labels[order[a]] = 1;
    mechanism[order[a]] = a % spec.n_blocks;
  }

  const double q0 = spec.background_rate;
  const double q1 = q0 + spec.effect_strength * (0.95 - q0);

  const int n_noise = spec.n_noise_groups * spec.noise_group_size;
  const int n_vars = spec.n_blocks * spec.block_size + n_noise;
  std::vector<VariableMeta> columns;
  columns.reserve(n_vars);
  std::vector<double> values(static_cast<std::size_t>(n_vars) * spec.n_obs);
  std::vector<std::vector<int>> blocks(spec.n_blocks);

  auto block_letters = [](int k) {
    std::string tag;
    tag.push_back(static_cast<char>('A' + k / 26));
    tag.push_back(static_cast<char>('A' + k % 26));
    return tag;
  };

  int col = 0;
  auto add_column = [&](const std::string& name, int block /* -1 = noise */) {
    VariableMeta meta;
    meta.name = name;
    meta.kind = VarKind::Binary;
    meta.original_index = col;
    double* dst = values.data() + static_cast<std::size_t>(col) * spec.n_obs;
    // Per-column stream; constant draws are redrawn deterministically so
    // small datasets cannot trip the no-constant-column invariant.
    const std::uint64_t col_seed = mix64(seed, seed_stream::synth_features, col);
    for (std::uint64_t attempt = 0;; ++attempt) {
      Rng rng(mix64(col_seed, attempt));
      bool constant = true;
      for (int r = 0; r < spec.n_obs; ++r) {
        const double p = (block >= 0 && mechanism[r] == block) ? q1 : q0;
        dst[r] = rng.bernoulli(p) ? 1.0 : 0.0;
        if (r > 0 && dst[r] != dst[0]) constant = false;
      }
      if (!constant) break;
    }
    if (block >= 0) blocks[block].push_back(col);
    columns.push_back(std::move(meta));
    ++col;
  };

  for (int b = 0; b < spec.n_blocks; ++b) {
    for (int v = 0; v < spec.block_size; ++v) {
      add_column("B" + block_letters(b) + "_" + std::to_string(v + 1), b);
    }
  }
  for (int g = 0; g < spec.n_noise_groups; ++g) {
    for (int v = 0; v < spec.noise_group_size; ++v) {
      add_column("N" + block_letters(g) + "_" + std::to_string(v + 1), -1);
    }
  }

  SynthDataset out{Dataset(std::move(labels), std::move(values), std::move(columns)),
                   std::move(blocks), std::move(mechanism)};
  return out;
}

// --- grouping-plan files --------------------------------------------------------

GroupingPlan read_grouping_file(const std::string& path, const Dataset& dataset) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open file: " + path);
  GroupingPlan plan;
  plan.provenance = GroupProvenance::Explicit;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    std::vector<int> group;
    std::stringstream ss(line);
    std::string token;
    while (std::getline(ss, token, ',')) {
      const auto begin = token.find_first_not_of(" \t");
      if (begin == std::string::npos) continue;
      const auto end = token.find_last_not_of(" \t");
      const std::string name = token.substr(begin, end - begin + 1);
      const int idx = dataset.column_index(name);
      if (idx < 0) {
        throw DataError(path + " line " + std::to_string(line_no) + ": unknown variable '" + name + "'");
      }
      group.push_back(idx);
    }
    if (!group.empty()) plan.groups.push_back(std::move(group));
  }
  plan.validate(dataset.n_vars());
  return plan;
}

void write_grouping_file(const std::string& path, const GroupingPlan& plan, const Dataset& dataset) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write file: " + path);
  for (const auto& group : plan.groups) {
    for (std::size_t i = 0; i < group.size(); ++i) {
      if (i) out << ',';
      out << dataset.columns()[group[i]].name;
    }
    out << '\n';
  }
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace epx
