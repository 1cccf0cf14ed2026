#pragma once

#include <cstdint>
#include <vector>

#include "epx/common.hpp"

namespace epx {

/// Per-observation activity scores paired with 0/1 labels.
struct RankedScores {
  std::vector<double> scores;
  std::vector<int> labels;
};

/// Expected hit curve. For untied scores hits[n-1] is the integer count of
/// actives among the n highest-scored observations; under ties it is the
/// expectation over random within-tie orderings, so increments lie in [0,1].
struct HitCurve {
  std::vector<double> hits;  // H(1) ... H(N); H(0) = 0 by convention
  int n_obs = 0;
  int n_active = 0;

  double hit_rate(int n) const { return hits[n - 1] / n; }  // h(n)
};

HitCurve hit_curve(const RankedScores& ranked);

/// Average precision: mean of h(t_m) over the ranked positions of the
/// actives. Ties are handled by the exact expectation over uniformly random
/// orderings within each tie block.
double ave_p(const RankedScores& ranked);

double ave_p(const std::vector<double>& scores, const std::vector<int>& labels);

/// Initial enhancement: h(n) / (M/N) at shortlist size n.
double initial_enhancement(const RankedScores& ranked, int shortlist);

/// Permutation reference distribution of AveP under uniformly random untied
/// ranking of n_obs items, n_active of them active.
struct NullCalibration {
  std::vector<double> samples;
  double a_median = 0;    // a_0.5
  double a_quantile = 0;  // a_alpha
  double alpha = 0.95;
  int n_obs = 0;
  int n_active = 0;
  std::uint64_t seed = 0;
};

NullCalibration null_calibration(int n_obs, int n_active, int b, double alpha, std::uint64_t seed,
                                 int threads = 1);

/// Empirical order statistic at index ceil(alpha * B) of the sorted samples.
double empirical_quantile(std::vector<double> samples, double alpha);

/// Fractional ranks, rank 1 = highest score; ties get the mean rank of the
/// tie block.
std::vector<double> fractional_ranks(const std::vector<double>& scores);

}  // namespace epx
