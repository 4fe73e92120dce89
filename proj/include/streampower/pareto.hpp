#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "streampower/power_model.hpp"

namespace streampower {

struct GroupKey {
    DeviceKind device = DeviceKind::Laptop;
    Codec codec = Codec::H264;

    friend auto operator<=>(const GroupKey&, const GroupKey&) = default;
};

std::string to_string(const GroupKey& group);          // "laptop:vp9"
GroupKey parse_group_key(std::string_view text);       // throws ValidationError

// One session in quality-power space.
struct QPPoint {
    std::string session_id;
    double mos = 0.0;
    double power_w = 0.0;
    GroupKey group;
};

struct FrontierVertex {
    double mos = 0.0;
    double power_w = 0.0;
};

// Quantile thresholds used to exclude outliers before hull construction.
struct TrimBounds {
    double power_lo = 0.0;
    double power_hi = 0.0;
    double mos_lo = 0.0;
};

bool is_outlier(const QPPoint& point, const TrimBounds& bounds);

// The Pareto-optimal chain of the convex hull: best quality at the lowest
// possible power. Vertices ascend in MOS with non-decreasing power, and every
// non-outlier point of the source group lies on or above the interpolant.
struct HullFrontier {
    GroupKey group;
    std::vector<FrontierVertex> vertices;
    std::size_t excluded_outliers = 0;
    double trim_quantile = 0.0;
    TrimBounds bounds;
};

// Trims power/MOS quantile outliers, computes the 2D convex hull of the rest,
// and extracts the lower-right Pareto chain. Requires >= 3 surviving points.
HullFrontier build_frontier(std::span<const QPPoint> points, double trim_quantile = 0.005);

// Piecewise-linear interpolation along the frontier, clamped at both ends.
double hull_power(const HullFrontier& frontier, double mos);

struct SessionSavings {
    std::string session_id;
    double delta_w = 0.0;    // hull power minus actual power; <= 0 for non-outliers
    double delta_rel = 0.0;  // delta_w / actual power
};

struct GroupSavings {
    GroupKey group;
    std::vector<SessionSavings> sessions;  // non-outliers, input order
    double mean_delta_w = 0.0;
    double mean_delta_rel = 0.0;
    std::size_t considered = 0;
    std::size_t excluded_outliers = 0;
};

// Per-session and mean savings of a group against its own frontier.
GroupSavings savings(std::span<const QPPoint> points, const HullFrontier& frontier);

using GroupMapping = std::map<GroupKey, GroupKey>;

// Savings when sessions of the source group are re-optimized against the
// target group's frontier at unchanged MOS.
struct ScenarioResult {
    GroupKey source;
    GroupKey target;
    std::size_t considered = 0;
    std::size_t excluded_outliers = 0;
    double mean_delta_w = 0.0;
    double mean_delta_rel = 0.0;
};

std::vector<ScenarioResult> scenario_switch(std::span<const QPPoint> points,
                                            const std::map<GroupKey, HullFrontier>& frontiers,
                                            const GroupMapping& mapping);

// 2D histogram over the points' bounding box, for density plots.
struct DensityGrid {
    std::size_t mos_bins = 0;
    std::size_t power_bins = 0;
    double mos_lo = 0.0, mos_hi = 0.0;
    double power_lo = 0.0, power_hi = 0.0;
    std::vector<std::uint64_t> counts;  // row-major: [power_bin][mos_bin]
    std::uint64_t total = 0;

    std::uint64_t at(std::size_t power_bin, std::size_t mos_bin) const {
        return counts[power_bin * mos_bins + mos_bin];
    }
};

DensityGrid density_grid(std::span<const QPPoint> points, std::size_t mos_bins,
                         std::size_t power_bins);

std::map<GroupKey, std::vector<QPPoint>> group_points(std::span<const QPPoint> points);

}  // namespace streampower
