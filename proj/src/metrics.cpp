#include "epx/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "epx/parallel.hpp"
#include "epx/rng.hpp"

namespace epx {

namespace {

struct TieBlock {
  int start;  // 1-based global rank of the first slot
  int size;
  int actives;
};

// Sorts observations by descending score and collapses equal scores into
// blocks. Only the block structure matters for the tie-expected metrics.
std::vector<TieBlock> tie_blocks(const RankedScores& ranked) {
  const int n = static_cast<int>(ranked.scores.size());
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return ranked.scores[a] > ranked.scores[b]; });
  std::vector<TieBlock> blocks;
  int i = 0;
  int rank = 1;
  while (i < n) {
    int j = i;
    int actives = 0;
    while (j < n && ranked.scores[order[j]] == ranked.scores[order[i]]) {
      actives += ranked.labels[order[j]];
      ++j;
    }
    blocks.push_back({rank, j - i, actives});
    rank += j - i;
    i = j;
  }
  return blocks;
}

void check_ranked(const RankedScores& ranked) {
  if (ranked.scores.empty()) throw DataError("empty score vector");
  if (ranked.scores.size() != ranked.labels.size()) {
    throw DataError("scores and labels differ in length");
  }
  for (int v : ranked.labels) {
    if (v != 0 && v != 1) throw DataError("labels must be 0 or 1");
  }
}

}  // namespace

HitCurve hit_curve(const RankedScores& ranked) {
  check_ranked(ranked);
  HitCurve curve;
  curve.n_obs = static_cast<int>(ranked.scores.size());
  curve.hits.resize(curve.n_obs);
  double cum = 0;
  int m = 0;
  for (const TieBlock& b : tie_blocks(ranked)) {
    // Expected actives among the first t slots of a block is t * a / g.
    const double step = static_cast<double>(b.actives) / b.size;
    for (int t = 1; t <= b.size; ++t) curve.hits[b.start - 1 + t - 1] = cum + step * t;
    cum += b.actives;
    m += b.actives;
  }
  curve.n_active = m;
  if (m == 0) throw DataError("no actives in ranking");
  curve.hits.back() = m;  // exact, guards against float drift
  return curve;
}

double ave_p(const RankedScores& ranked) {
  check_ranked(ranked);
  const auto blocks = tie_blocks(ranked);

  int n_active = 0;
  for (const auto& b : blocks) n_active += b.actives;
  if (n_active == 0) throw DataError("AveP undefined: no actives");

  // The (A0+j)-th active overall sits at the j-th active offset o_j of its
  // block; its hit rate is (A0+j)/(start-1+o_j). The offsets of a block's
  // actives form a uniformly random a-subset of {1..g}, so
  //   P(o_j = t) = C(t-1, j-1) C(g-t, a-j) / C(g, a),
  // evaluated by recurrence over t to avoid large binomials.
  double total = 0;
  int a0 = 0;
  for (const auto& b : blocks) {
    const int g = b.size;
    const int a = b.actives;
    if (a == 0) continue;
    for (int j = 1; j <= a; ++j) {
      double p = 1.0;  // P(o_j = j) = prod_{i<j} (a-i)/(g-i)
      for (int i = 0; i < j; ++i) p *= static_cast<double>(a - i) / (g - i);
      double expect_inv = 0;
      const int t_max = g - a + j;
      for (int t = j; t <= t_max; ++t) {
        expect_inv += p / (b.start - 1 + t);
        if (t < t_max) {  // advance to P(o_j = t+1)
          p *= static_cast<double>(t) * (g - t - a + j) / ((t - j + 1) * static_cast<double>(g - t));
        }
      }
      total += (a0 + j) * expect_inv;
    }
    a0 += a;
  }
  return total / n_active;
}

double ave_p(const std::vector<double>& scores, const std::vector<int>& labels) {
  return ave_p(RankedScores{scores, labels});
}

double initial_enhancement(const RankedScores& ranked, int shortlist) {
  const HitCurve curve = hit_curve(ranked);
  if (shortlist < 1 || shortlist > curve.n_obs) {
    throw DataError("shortlist size out of range: " + std::to_string(shortlist));
  }
  const double base_rate = static_cast<double>(curve.n_active) / curve.n_obs;
  return curve.hit_rate(shortlist) / base_rate;
}

double empirical_quantile(std::vector<double> samples, double alpha) {
  if (samples.empty()) throw DataError("quantile of empty sample set");
  std::sort(samples.begin(), samples.end());
  const auto b = samples.size();
  std::size_t idx = static_cast<std::size_t>(std::ceil(alpha * static_cast<double>(b)));
  if (idx < 1) idx = 1;
  if (idx > b) idx = b;
  return samples[idx - 1];
}

namespace {

// AveP of one uniformly random untied ranking: draw the active positions
// (a uniform m-subset of {1..n}, Floyd's algorithm), then average j / t_j.
double null_sample(int n, int m, Rng& rng) {
  std::vector<int> positions;
  positions.reserve(m);
  for (int j = n - m + 1; j <= n; ++j) {
    const int r = 1 + rng.below_int(j);
    bool taken = false;
    for (int p : positions) {
      if (p == r) {
        taken = true;
        break;
      }
    }
    positions.push_back(taken ? j : r);
  }
  std::sort(positions.begin(), positions.end());
  double total = 0;
  for (int j = 1; j <= m; ++j) total += static_cast<double>(j) / positions[j - 1];
  return total / m;
}

}  // namespace

NullCalibration null_calibration(int n_obs, int n_active, int b, double alpha, std::uint64_t seed,
                                 int threads) {
  if (n_active < 1 || n_active >= n_obs) throw DataError("null calibration needs 1 <= M < N");
  if (b < 1) throw DataError("null calibration needs B >= 1");
  if (alpha <= 0.0 || alpha >= 1.0) throw DataError("alpha must be in (0,1)");

  NullCalibration calib;
  calib.alpha = alpha;
  calib.n_obs = n_obs;
  calib.n_active = n_active;
  calib.seed = seed;
  calib.samples.resize(b);
  parallel_for(static_cast<std::size_t>(b), threads, [&](std::size_t i) {
    Rng rng(mix64(seed, i));
    calib.samples[i] = null_sample(n_obs, n_active, rng);
  });
  calib.a_median = empirical_quantile(calib.samples, 0.5);
  calib.a_quantile = empirical_quantile(calib.samples, alpha);
  return calib;
}

std::vector<double> fractional_ranks(const std::vector<double>& scores) {
  const int n = static_cast<int>(scores.size());
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return scores[a] > scores[b]; });
  std::vector<double> ranks(n);
  int i = 0;
  while (i < n) {
    int j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double mean_rank = (i + 1 + j) / 2.0;  // mean of ranks i+1..j
    for (int k = i; k < j; ++k) ranks[order[k]] = mean_rank;
    i = j;
  }
  return ranks;
}

}  // namespace epx
