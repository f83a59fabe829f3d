#include "worldguide/depth_metric.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "worldguide/error.h"
#include "worldguide/random.h"

namespace worldguide {
namespace {

constexpr double kMinRelativeSpread = 1e-6;
constexpr int kMaxRefits = 5;

void CheckPairs(std::span<const DepthCorrespondence> pairs) {
  if (pairs.size() < 2) {
    Fail(ErrorCode::kInvalidArgument,
         "at least 2 depth correspondences are required, got " +
             std::to_string(pairs.size()));
  }
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto& p = pairs[i];
    if (!(std::isfinite(p.mono) && p.mono > 0) ||
        !(std::isfinite(p.metric) && p.metric > 0)) {
      Fail(ErrorCode::kInvalidArgument,
           "correspondence " + std::to_string(i) +
               " must have finite positive depths");
    }
    if (!(p.weight >= 0.0 && p.weight <= 1.0)) {
      Fail(ErrorCode::kInvalidArgument,
           "correspondence " + std::to_string(i) + " weight outside [0,1]");
    }
  }
}

bool IsInlier(const DepthCorrespondence& p, double scale, double shift,
              double threshold) {
  return std::abs(scale * p.mono + shift - p.metric) / p.metric < threshold;
}

std::vector<std::uint8_t> InlierFlags(std::span<const DepthCorrespondence> pairs,
                                      double scale, double shift,
                                      double threshold) {
  std::vector<std::uint8_t> flags(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    flags[i] = IsInlier(pairs[i], scale, shift, threshold);
  }
  return flags;
}

}  // namespace

ScaleShift FitScaleShiftLeastSquares(
    std::span<const DepthCorrespondence> pairs) {
  // Zero total weight falls back to an unweighted fit.
  double total = 0.0;
  for (const auto& p : pairs) total += p.weight;
  const bool unweighted = !(total > 0.0);

  double sw = 0, sx = 0, sy = 0;
  for (const auto& p : pairs) {
    const double w = unweighted ? 1.0 : p.weight;
    sw += w;
    sx += w * p.mono;
    sy += w * p.metric;
  }
  if (!(sw > 0.0)) {
    Fail(ErrorCode::kDegenerateDepth, "no correspondences to fit");
  }
  const double mx = sx / sw;
  const double my = sy / sw;
  double sxx = 0, sxy = 0;
  for (const auto& p : pairs) {
    const double w = unweighted ? 1.0 : p.weight;
    sxx += w * (p.mono - mx) * (p.mono - mx);
    sxy += w * (p.mono - mx) * (p.metric - my);
  }
  if (!(sxx > kMinRelativeSpread * kMinRelativeSpread * mx * mx * sw)) {
    Fail(ErrorCode::kDegenerateDepth,
         "mono depths have no spread; scale and shift are not identifiable");
  }
  ScaleShift out;
  out.scale = sxy / sxx;
  out.shift = my - out.scale * mx;
  out.inlier_ratio = 1.0;
  return out;
}

ScaleShift EstimateScaleShift(std::span<const DepthCorrespondence> pairs,
                              const RansacConfig& config) {
  CheckPairs(pairs);
  if (config.iterations < 1) {
    Fail(ErrorCode::kInvalidArgument, "RANSAC needs at least one iteration");
  }

  const auto [lo, hi] = std::minmax_element(
      pairs.begin(), pairs.end(),
      [](const auto& a, const auto& b) { return a.mono < b.mono; });
  if (hi->mono - lo->mono < kMinRelativeSpread * hi->mono) {
    Fail(ErrorCode::kDegenerateDepth,
         "mono depth is constant; refusing to fit a collapsed depth map");
  }

  const std::size_t n = pairs.size();
  std::size_t best_count = 0;
  double best_scale = 0.0, best_shift = 0.0;
  for (int it = 0; it < config.iterations; ++it) {
    SplitMix64 rng(Mix64(config.seed) ^ Mix64(std::uint64_t(it) + 1));
    const std::size_t i = rng.Below(n);
    std::size_t j = rng.Below(n - 1);
    if (j >= i) ++j;
    const auto& a = pairs[i];
    const auto& b = pairs[j];
    const double dm = a.mono - b.mono;
    if (std::abs(dm) < kMinRelativeSpread * std::max(a.mono, b.mono)) continue;
    const double scale = (a.metric - b.metric) / dm;
    if (!(scale > 0.0)) continue;
    const double shift = a.metric - scale * a.mono;

    std::size_t count = 0;
    for (const auto& p : pairs) {
      count += IsInlier(p, scale, shift, config.inlier_threshold_rel);
    }
    // Strict comparison: the earliest iteration wins ties.
    if (count > best_count) {
      best_count = count;
      best_scale = scale;
      best_shift = shift;
    }
  }
  if (best_count < 2) {
    Fail(ErrorCode::kDegenerateDepth,
         "no RANSAC hypothesis with positive scale gathered two inliers");
  }

  // Refit on the consensus set until it stops changing.
  std::vector<std::uint8_t> flags =
      InlierFlags(pairs, best_scale, best_shift, config.inlier_threshold_rel);
  ScaleShift fit{best_scale, best_shift, 0.0};
  for (int round = 0; round < kMaxRefits; ++round) {
    std::vector<DepthCorrespondence> inliers;
    for (std::size_t k = 0; k < n; ++k) {
      if (flags[k]) inliers.push_back(pairs[k]);
    }
    if (inliers.size() < 2) break;
    ScaleShift refit;
    try {
      refit = FitScaleShiftLeastSquares(inliers);
    } catch (const Error&) {
      break;
    }
    if (!(refit.scale > 0.0)) break;
    fit = refit;
    auto next =
        InlierFlags(pairs, fit.scale, fit.shift, config.inlier_threshold_rel);
    if (next == flags) break;
    flags = std::move(next);
  }

  std::size_t inlier_count = 0;
  for (auto f : InlierFlags(pairs, fit.scale, fit.shift,
                            config.inlier_threshold_rel)) {
    inlier_count += f;
  }
  fit.inlier_ratio = double(inlier_count) / double(n);
  if (fit.inlier_ratio < config.min_inlier_ratio) {
    std::ostringstream why;
    why << "inlier ratio " << fit.inlier_ratio << " below minimum "
        << config.min_inlier_ratio;
    Fail(ErrorCode::kInsufficientInliers, why.str());
  }
  return fit;
}

DepthMap ApplyScaleShift(const DepthMap& depth, const ScaleShift& scale_shift) {
  if (!(scale_shift.scale > 0.0) || !std::isfinite(scale_shift.shift)) {
    Fail(ErrorCode::kInvalidArgument, "scale must be positive");
  }
  DepthMap out(depth.width, depth.height);
  for (std::size_t i = 0; i < depth.values.size(); ++i) {
    if (!depth.valid[i]) continue;
    const double d = scale_shift.scale * depth.values[i] + scale_shift.shift;
    if (std::isfinite(d) && d > 0) {
      out.values[i] = d;
      out.valid[i] = 1;
    }
  }
  return out;
}

}  // namespace worldguide
