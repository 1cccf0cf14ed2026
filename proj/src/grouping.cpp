#include "epx/grouping.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>

#include "epx/parallel.hpp"

namespace epx {

double jaccard_distance(std::span<const double> xi, std::span<const double> xj) {
  if (xi.size() != xj.size()) throw DataError("jaccard: column lengths differ");
  long both = 0;
  long either = 0;
  for (std::size_t r = 0; r < xi.size(); ++r) {
    const bool a = xi[r] != 0.0;
    const bool b = xj[r] != 0.0;
    both += (a && b);
    either += (a || b);
  }
  if (either == 0) throw DataError("jaccard undefined: both columns are all zero");
  return 1.0 - static_cast<double>(both) / static_cast<double>(either);
}

DissimilarityMatrix jaccard_matrix(const Dataset& dataset, const std::vector<int>& binary_columns,
                                   int threads) {
  const int d = static_cast<int>(binary_columns.size());
  // Pack columns into bitsets; popcount makes the all-pairs pass cheap.
  const int words = (dataset.n_obs() + 63) / 64;
  std::vector<std::uint64_t> bits(static_cast<std::size_t>(d) * words, 0);
  for (int c = 0; c < d; ++c) {
    const int col = binary_columns[c];
    if (dataset.columns()[col].kind != VarKind::Binary) {
      throw DataError("jaccard grouping: column " + dataset.columns()[col].name + " is not binary");
    }
    auto column = dataset.column(col);
    for (int r = 0; r < dataset.n_obs(); ++r) {
      if (column[r] != 0.0) bits[static_cast<std::size_t>(c) * words + r / 64] |= 1ULL << (r % 64);
    }
  }
  DissimilarityMatrix dist(d);
  parallel_for(static_cast<std::size_t>(d), threads, [&](std::size_t i) {
    const std::uint64_t* wi = bits.data() + i * words;
    for (int j = static_cast<int>(i) + 1; j < d; ++j) {
      const std::uint64_t* wj = bits.data() + static_cast<std::size_t>(j) * words;
      long both = 0;
      long either = 0;
      for (int w = 0; w < words; ++w) {
        both += std::popcount(wi[w] & wj[w]);
        either += std::popcount(wi[w] | wj[w]);
      }
      if (either == 0) throw DataError("jaccard undefined: two all-zero columns");
      dist.set(static_cast<int>(i), j, 1.0 - static_cast<double>(both) / either);
    }
  });
  return dist;
}

Dendrogram ward_dendrogram(const DissimilarityMatrix& dist, WardVariant variant) {
  const int n = dist.size();
  Dendrogram dendrogram;
  dendrogram.n_leaves = n;
  if (n <= 1) return dendrogram;

  // Working copy; slot i holds the current distance of active cluster i.
  std::vector<double> d(static_cast<std::size_t>(n) * n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double v = dist.at(i, j);
      d[static_cast<std::size_t>(i) * n + j] = variant == WardVariant::D2 ? v * v : v;
    }
  }
  std::vector<bool> active(n, true);
  std::vector<int> cluster_id(n);   // scipy-style id of the cluster in slot i
  std::vector<double> size(n, 1.0);
  for (int i = 0; i < n; ++i) cluster_id[i] = i;

  for (int step = 0; step < n - 1; ++step) {
    int bi = -1;
    int bj = -1;
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
      if (!active[i]) continue;
      for (int j = i + 1; j < n; ++j) {
        if (!active[j]) continue;
        const double v = d[static_cast<std::size_t>(i) * n + j];
        if (bi < 0 || v < best ||
            (v == best && (cluster_id[i] < cluster_id[bi] ||
                           (cluster_id[i] == cluster_id[bi] && cluster_id[j] < cluster_id[bj])))) {
          best = v;
          bi = i;
          bj = j;
        }
      }
    }
    const double height = variant == WardVariant::D2 ? std::sqrt(best) : best;
    dendrogram.steps.push_back({std::min(cluster_id[bi], cluster_id[bj]),
                                std::max(cluster_id[bi], cluster_id[bj]), height});

    // Lance-Williams Ward update into slot bi.
    const double ni = size[bi];
    const double nj = size[bj];
    for (int k = 0; k < n; ++k) {
      if (!active[k] || k == bi || k == bj) continue;
      const double nk = size[k];
      const double dik = d[static_cast<std::size_t>(bi) * n + k];
      const double djk = d[static_cast<std::size_t>(bj) * n + k];
      const double updated = ((ni + nk) * dik + (nj + nk) * djk - nk * best) / (ni + nj + nk);
      d[static_cast<std::size_t>(bi) * n + k] = updated;
      d[static_cast<std::size_t>(k) * n + bi] = updated;
    }
    size[bi] = ni + nj;
    active[bj] = false;
    cluster_id[bi] = n + step;
  }
  return dendrogram;
}

std::vector<std::vector<int>> cut_dendrogram(const Dendrogram& dendrogram, int k) {
  const int n = dendrogram.n_leaves;
  if (k < 1 || k > n) throw DataError("dendrogram cut: k out of range");
  // Union-find over the first n-k merges.
  std::vector<int> parent(n + dendrogram.steps.size());
  for (std::size_t i = 0; i < parent.size(); ++i) parent[i] = static_cast<int>(i);
  auto find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (int s = 0; s < n - k; ++s) {
    const auto& step = dendrogram.steps[s];
    parent[find(step.a)] = n + s;
    parent[find(step.b)] = n + s;
  }
  std::vector<std::vector<int>> by_root(parent.size());
  for (int leaf = 0; leaf < n; ++leaf) by_root[find(leaf)].push_back(leaf);
  std::vector<std::vector<int>> groups;
  for (auto& members : by_root) {
    if (!members.empty()) groups.push_back(std::move(members));
  }
  std::sort(groups.begin(), groups.end(),
            [](const auto& a, const auto& b) { return a.front() < b.front(); });
  return groups;
}

GroupingPlan ward_cluster(const DissimilarityMatrix& dist, int k, WardVariant variant) {
  GroupingPlan plan;
  plan.provenance = GroupProvenance::Clusters;
  plan.groups = cut_dendrogram(ward_dendrogram(dist, variant), k);
  return plan;
}

GroupingPlan cluster_groups(const Dataset& dataset, int k, WardVariant variant, int threads) {
  std::vector<int> binary;
  std::vector<int> continuous;
  for (int c = 0; c < dataset.n_vars(); ++c) {
    (dataset.columns()[c].kind == VarKind::Binary ? binary : continuous).push_back(c);
  }
  if (binary.empty()) throw DataError("cluster grouping needs at least one binary column");
  if (k < 1 || k > static_cast<int>(binary.size())) {
    throw DataError("cluster grouping: k out of range for " + std::to_string(binary.size()) +
                    " binary columns");
  }
  const auto dist = jaccard_matrix(dataset, binary, threads);
  GroupingPlan plan;
  plan.provenance = GroupProvenance::Clusters;
  for (const auto& group : cut_dendrogram(ward_dendrogram(dist, variant), k)) {
    std::vector<int> columns;
    columns.reserve(group.size());
    for (int idx : group) columns.push_back(binary[idx]);
    plan.groups.push_back(std::move(columns));
  }
  for (int c : continuous) plan.groups.push_back({c});
  return plan;
}

}  // namespace epx
