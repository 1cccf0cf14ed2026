#pragma once

#include <string>

#include "epx/cv.hpp"
#include "epx/metrics.hpp"

namespace epx {

/// Hit-curve line plot. Plots are conveniences; the CSVs are the outputs of
/// record.
void write_hit_curve_svg(const std::string& path, const HitCurve& curve);

/// Gray-scale rank heatmap, darker = smaller rank.
void write_diversity_svg(const std::string& path, const DiversityMap& map, int n_obs);

}  // namespace epx
