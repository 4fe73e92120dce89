#include "streampower/pareto.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "streampower/errors.hpp"

namespace streampower {

namespace {

// Nearest-rank quantile: smallest element with at least ceil(q*n) elements at
// or below it. Exact, interpolation-free, so tiny sets keep their extremes.
double nearest_rank_quantile(std::vector<double> sorted, double q) {
    const auto n = static_cast<double>(sorted.size());
    auto rank = static_cast<std::ptrdiff_t>(std::ceil(q * n)) - 1;
    rank = std::clamp<std::ptrdiff_t>(rank, 0, static_cast<std::ptrdiff_t>(sorted.size()) - 1);
    return sorted[static_cast<std::size_t>(rank)];
}

double cross(const FrontierVertex& origin, const FrontierVertex& a, const FrontierVertex& b) {
    return (a.mos - origin.mos) * (b.power_w - origin.power_w) -
           (a.power_w - origin.power_w) * (b.mos - origin.mos);
}

void validate_points(std::span<const QPPoint> points) {
    if (points.empty()) {
        throw ValidationError("no points supplied");
    }
    const GroupKey group = points.front().group;
    for (const QPPoint& p : points) {
        if (p.group != group) {
            throw ValidationError("points span multiple groups: " + to_string(group) +
                                  " and " + to_string(p.group));
        }
        if (!(p.power_w > 0.0) || !std::isfinite(p.power_w) || !std::isfinite(p.mos)) {
            throw ValidationError("session '" + p.session_id +
                                  "': power must be positive and finite");
        }
    }
}

struct KahanSum {
    double sum = 0.0;
    double carry = 0.0;

    void add(double value) {
        const double y = value - carry;
        const double t = sum + y;
        carry = (t - sum) - y;
        sum = t;
    }
};

}  // namespace

std::string to_string(const GroupKey& group) {
    return std::string(to_string(group.device)) + ":" + std::string(to_string(group.codec));
}

GroupKey parse_group_key(std::string_view text) {
    const auto colon = text.find(':');
    if (colon == std::string_view::npos) {
        throw ValidationError("group must look like '<device>:<codec>', got '" +
                              std::string(text) + "'");
    }
    GroupKey key;
    key.device = parse_device_kind(text.substr(0, colon));
    key.codec = parse_codec(text.substr(colon + 1));
    return key;
}

bool is_outlier(const QPPoint& point, const TrimBounds& bounds) {
    return point.power_w < bounds.power_lo || point.power_w > bounds.power_hi ||
           point.mos < bounds.mos_lo;
}

HullFrontier build_frontier(std::span<const QPPoint> points, double trim_quantile) {
    validate_points(points);
    if (trim_quantile < 0.0 || trim_quantile >= 0.5) {
        throw ValidationError("trim quantile must lie in [0, 0.5)");
    }

    std::vector<double> powers, moses;
    powers.reserve(points.size());
    moses.reserve(points.size());
    for (const QPPoint& p : points) {
        powers.push_back(p.power_w);
        moses.push_back(p.mos);
    }
    std::sort(powers.begin(), powers.end());
    std::sort(moses.begin(), moses.end());

    HullFrontier frontier;
    frontier.group = points.front().group;
    frontier.trim_quantile = trim_quantile;
    frontier.bounds.power_lo = nearest_rank_quantile(powers, trim_quantile);
    frontier.bounds.power_hi = nearest_rank_quantile(powers, 1.0 - trim_quantile);
    frontier.bounds.mos_lo = nearest_rank_quantile(moses, trim_quantile);

    std::vector<FrontierVertex> kept;
    kept.reserve(points.size());
    for (const QPPoint& p : points) {
        if (!is_outlier(p, frontier.bounds)) kept.push_back({p.mos, p.power_w});
    }
    frontier.excluded_outliers = points.size() - kept.size();
    if (kept.size() < 3) {
        throw ValidationError("group " + to_string(frontier.group) + ": only " +
                              std::to_string(kept.size()) +
                              " points survive trimming; need at least 3");
    }

    std::sort(kept.begin(), kept.end(), [](const FrontierVertex& a, const FrontierVertex& b) {
        return a.mos < b.mos || (a.mos == b.mos && a.power_w < b.power_w);
    });
    // Only the cheapest point at each MOS can sit on the lower hull.
    std::vector<FrontierVertex> columns;
    columns.reserve(kept.size());
    for (const FrontierVertex& v : kept) {
        if (!columns.empty() && columns.back().mos == v.mos) continue;
        columns.push_back(v);
    }

    // Andrew's monotone chain, lower hull only; collinear midpoints dropped.
    std::vector<FrontierVertex> hull;
    hull.reserve(columns.size());
    for (const FrontierVertex& v : columns) {
        while (hull.size() >= 2 && cross(hull[hull.size() - 2], hull.back(), v) <= 0.0) {
            hull.pop_back();
        }
        hull.push_back(v);
    }

    // Pareto chain: start from the last power minimum, where the lower hull
    // stops descending. Everything before it is dominated.
    std::size_t start = 0;
    for (std::size_t i = 1; i < hull.size(); ++i) {
        if (hull[i].power_w <= hull[start].power_w) start = i;
    }
    frontier.vertices.assign(hull.begin() + static_cast<std::ptrdiff_t>(start), hull.end());
    return frontier;
}

double hull_power(const HullFrontier& frontier, double mos) {
    const auto& v = frontier.vertices;
    if (v.empty()) {
        throw ValidationError("frontier has no vertices");
    }
    if (mos <= v.front().mos) return v.front().power_w;
    if (mos >= v.back().mos) return v.back().power_w;
    // First vertex with mos strictly greater; predecessor starts the segment.
    const auto upper = std::upper_bound(
        v.begin(), v.end(), mos,
        [](double value, const FrontierVertex& vertex) { return value < vertex.mos; });
    const FrontierVertex& hi = *upper;
    const FrontierVertex& lo = *(upper - 1);
    if (mos == lo.mos) return lo.power_w;
    const double t = (mos - lo.mos) / (hi.mos - lo.mos);
    return lo.power_w + t * (hi.power_w - lo.power_w);
}

GroupSavings savings(std::span<const QPPoint> points, const HullFrontier& frontier) {
    validate_points(points);
    if (points.front().group != frontier.group) {
        throw ValidationError("points belong to " + to_string(points.front().group) +
                              " but the frontier was built for " + to_string(frontier.group));
    }

    GroupSavings report;
    report.group = frontier.group;
    KahanSum sum_delta, sum_rel;
    for (const QPPoint& p : points) {
        if (is_outlier(p, frontier.bounds)) {
            report.excluded_outliers += 1;
            continue;
        }
        const double delta = hull_power(frontier, p.mos) - p.power_w;
        const double rel = delta / p.power_w;
        report.sessions.push_back({p.session_id, delta, rel});
        sum_delta.add(delta);
        sum_rel.add(rel);
        report.considered += 1;
    }
    if (report.considered > 0) {
        report.mean_delta_w = sum_delta.sum / static_cast<double>(report.considered);
        report.mean_delta_rel = sum_rel.sum / static_cast<double>(report.considered);
    }
    return report;
}

std::vector<ScenarioResult> scenario_switch(std::span<const QPPoint> points,
                                            const std::map<GroupKey, HullFrontier>& frontiers,
                                            const GroupMapping& mapping) {
    const auto grouped = group_points(points);
    std::vector<ScenarioResult> results;
    results.reserve(mapping.size());
    for (const auto& [source, target] : mapping) {
        const auto source_frontier = frontiers.find(source);
        if (source_frontier == frontiers.end()) {
            throw ValidationError("no frontier available for source group " + to_string(source));
        }
        const auto target_frontier = frontiers.find(target);
        if (target_frontier == frontiers.end()) {
            throw ValidationError("no frontier available for target group " + to_string(target));
        }

        ScenarioResult result;
        result.source = source;
        result.target = target;
        const auto member = grouped.find(source);
        if (member != grouped.end()) {
            KahanSum sum_delta, sum_rel;
            // Source-group trim bounds decide exclusions, so an identity
            // mapping coincides with savings().
            for (const QPPoint& p : member->second) {
                if (is_outlier(p, source_frontier->second.bounds)) {
                    result.excluded_outliers += 1;
                    continue;
                }
                const double delta = hull_power(target_frontier->second, p.mos) - p.power_w;
                sum_delta.add(delta);
                sum_rel.add(delta / p.power_w);
                result.considered += 1;
            }
            if (result.considered > 0) {
                result.mean_delta_w = sum_delta.sum / static_cast<double>(result.considered);
                result.mean_delta_rel = sum_rel.sum / static_cast<double>(result.considered);
            }
        }
        results.push_back(result);
    }
    return results;
}

DensityGrid density_grid(std::span<const QPPoint> points, std::size_t mos_bins,
                         std::size_t power_bins) {
    if (mos_bins < 1 || power_bins < 1) {
        throw ValidationError("density grid needs at least one bin per axis");
    }
    DensityGrid grid;
    grid.mos_bins = mos_bins;
    grid.power_bins = power_bins;
    grid.counts.assign(mos_bins * power_bins, 0);
    if (points.empty()) return grid;

    grid.mos_lo = grid.mos_hi = points.front().mos;
    grid.power_lo = grid.power_hi = points.front().power_w;
    for (const QPPoint& p : points) {
        grid.mos_lo = std::min(grid.mos_lo, p.mos);
        grid.mos_hi = std::max(grid.mos_hi, p.mos);
        grid.power_lo = std::min(grid.power_lo, p.power_w);
        grid.power_hi = std::max(grid.power_hi, p.power_w);
    }

    auto bin_index = [](double value, double lo, double hi, std::size_t bins) {
        if (hi <= lo) return std::size_t{0};
        const double t = (value - lo) / (hi - lo);
        const auto raw = static_cast<std::size_t>(t * static_cast<double>(bins));
        return std::min(raw, bins - 1);
    };
    for (const QPPoint& p : points) {
        const std::size_t m = bin_index(p.mos, grid.mos_lo, grid.mos_hi, mos_bins);
        const std::size_t w = bin_index(p.power_w, grid.power_lo, grid.power_hi, power_bins);
        grid.counts[w * mos_bins + m] += 1;
        grid.total += 1;
    }
    return grid;
}

std::map<GroupKey, std::vector<QPPoint>> group_points(std::span<const QPPoint> points) {
    std::map<GroupKey, std::vector<QPPoint>> grouped;
    for (const QPPoint& p : points) {
        grouped[p.group].push_back(p);
    }
    return grouped;
}

}  // namespace streampower
