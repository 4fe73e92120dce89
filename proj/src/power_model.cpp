#include "streampower/power_model.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <sstream>

#include "streampower/errors.hpp"

namespace streampower {

namespace {

std::string lowercase(std::string_view text) {
    std::string out(text);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

void require_finite(double value, std::string_view name) {
    if (!std::isfinite(value)) {
        throw ValidationError("variable '" + std::string(name) + "' is not finite");
    }
}

}  // namespace

std::string_view to_string(DeviceKind kind) {
    return kind == DeviceKind::Laptop ? "laptop" : "pc";
}

std::string_view to_string(Codec codec) {
    return codec == Codec::H264 ? "h264" : "vp9";
}

std::optional<DeviceKind> try_parse_device_kind(std::string_view text) {
    const std::string t = lowercase(text);
    if (t == "laptop") return DeviceKind::Laptop;
    if (t == "pc" || t == "desktop_pc" || t == "desktop pc") return DeviceKind::DesktopPC;
    return std::nullopt;
}

std::optional<Codec> try_parse_codec(std::string_view text) {
    const std::string t = lowercase(text);
    if (t == "h264" || t == "h.264" || t == "avc") return Codec::H264;
    if (t == "vp9") return Codec::Vp9;
    return std::nullopt;
}

DeviceKind parse_device_kind(std::string_view text) {
    if (auto kind = try_parse_device_kind(text)) return *kind;
    throw ValidationError("unknown device kind: '" + std::string(text) + "'");
}

Codec parse_codec(std::string_view text) {
    if (auto codec = try_parse_codec(text)) return *codec;
    throw ValidationError("unknown codec: '" + std::string(text) + "'");
}

std::array<double, kVariableCount> VariableVector::as_array() const {
    return {constant,            frame_rate,  pixels_per_second, video_bitrate_kbps,
            online_bitrate_kbps, online_flag, codec};
}

void VariableVector::validate() const {
    const auto vars = as_array();
    for (std::size_t i = 0; i < kVariableCount; ++i) {
        require_finite(vars[i], kVariableNames[i]);
    }
    if (constant != 1.0) {
        throw ValidationError("variable vector constant must be exactly 1");
    }
    if (frame_rate < 0.0 || frame_rate > 240.0) {
        throw ValidationError("frame_rate must lie in [0, 240] Hz");
    }
    if (pixels_per_second < 0.0 || video_bitrate_kbps < 0.0 || online_bitrate_kbps < 0.0) {
        throw ValidationError("physical variables must be non-negative");
    }
    if (online_flag != 0.0 && online_flag != 1.0) {
        throw ValidationError("online_flag must be 0 or 1");
    }
    if (codec != 0.0 && codec != 1.0) {
        throw ValidationError("codec variable must be 0 (H.264) or 1 (VP9)");
    }
    if (online_flag == 1.0 && online_bitrate_kbps < video_bitrate_kbps) {
        throw ValidationError("online bitrate must not be below video bitrate when online");
    }
}

std::array<double, kVariableCount> default_v_max() {
    // Maxima of the envelope the model was trained over: 60 Hz, 1080p60 pixel
    // rate, 18 Mbps on both bitrates, flags at their upper value.
    return {1.0, 60.0, 124'416'000.0, 18'000.0, 18'000.0, 1.0, 1.0};
}

double predict_power(const DeviceProfile& profile, const VariableVector& v) {
    if (profile.coefficients.size() != kVariableCount) {
        throw StructuralError("profile '" + profile.label + "' has " +
                              std::to_string(profile.coefficients.size()) +
                              " coefficients, expected " + std::to_string(kVariableCount));
    }
    v.validate();
    if (!profile.online_offset_applicable && v.online_flag != 0.0) {
        throw ValidationError("profile '" + profile.label +
                              "' carries no online offset; online_flag must be 0");
    }
    const auto vars = v.as_array();
    double power = 0.0;
    for (std::size_t i = 0; i < kVariableCount; ++i) {
        power += profile.coefficients[i] * vars[i];
    }
    return power;
}

ImpactTable impact_table(const DeviceProfile& profile) {
    if (profile.coefficients.size() != kVariableCount) {
        throw StructuralError("profile '" + profile.label + "' has " +
                              std::to_string(profile.coefficients.size()) +
                              " coefficients, expected " + std::to_string(kVariableCount));
    }
    ImpactTable table;
    table.device = profile.device;
    table.label = profile.label;
    for (std::size_t i = 0; i < kVariableCount; ++i) {
        ImpactEntry& entry = table.entries[i];
        entry.variable = kVariableNames[i];
        entry.coefficient = profile.coefficients[i];
        entry.applicable = profile.online_offset_applicable || kVariableNames[i] != "online_flag";
        if (!entry.applicable) {
            entry.v_max = 0.0;
            entry.impact_w = 0.0;
            continue;
        }
        if (std::isnan(profile.v_max[i])) {
            throw ConfigError("profile '" + profile.label + "' is missing v_max for '" +
                              std::string(kVariableNames[i]) + "'");
        }
        entry.v_max = profile.v_max[i];
        entry.impact_w = entry.coefficient * entry.v_max;
    }
    return table;
}

const std::map<DeviceKind, DeviceProfile>& builtin_profiles() {
    static const std::map<DeviceKind, DeviceProfile> profiles = [] {
        std::map<DeviceKind, DeviceProfile> map;

        DeviceProfile laptop;
        laptop.device = DeviceKind::Laptop;
        laptop.coefficients = {8.52, 0.035, 5.76e-9, 6.97e-6, 3.24e-5, 1.15, 4.16};
        laptop.online_offset_applicable = true;
        laptop.v_max = default_v_max();
        laptop.label = "builtin-laptop-v1";
        map.emplace(DeviceKind::Laptop, std::move(laptop));

        DeviceProfile pc;
        pc.device = DeviceKind::DesktopPC;
        pc.coefficients = {73.3, 0.19, 6.29e-8, 4.05e-4, -5.28e-5, 0.0, -5.73};
        pc.online_offset_applicable = false;
        pc.v_max = default_v_max();
        pc.label = "builtin-pc-v1";
        map.emplace(DeviceKind::DesktopPC, std::move(pc));

        return map;
    }();
    return profiles;
}

std::vector<PowerBand> power_bands(const DeviceProfile& profile, Codec codec,
                                   std::span<const Resolution> resolutions,
                                   std::span<const double> frame_rates,
                                   std::pair<double, double> bitrate_range_kbps,
                                   std::optional<bool> online) {
    if (resolutions.empty() || frame_rates.empty()) {
        throw ValidationError("power_bands requires at least one resolution and frame rate");
    }
    if (bitrate_range_kbps.first > bitrate_range_kbps.second) {
        throw ValidationError("bitrate range minimum exceeds maximum");
    }
    const bool use_online = online.value_or(profile.online_offset_applicable);

    std::vector<PowerBand> bands;
    bands.reserve(resolutions.size() * frame_rates.size());
    for (const Resolution& res : resolutions) {
        for (const double fps : frame_rates) {
            auto vector_at = [&](double bitrate) {
                VariableVector v;
                v.frame_rate = fps;
                v.pixels_per_second = static_cast<double>(res.width) *
                                      static_cast<double>(res.height) * fps;
                v.video_bitrate_kbps = bitrate;
                v.online_bitrate_kbps = bitrate;
                v.online_flag = use_online ? 1.0 : 0.0;
                v.codec = static_cast<double>(static_cast<int>(codec));
                return v;
            };
            const double at_min = predict_power(profile, vector_at(bitrate_range_kbps.first));
            const double at_max = predict_power(profile, vector_at(bitrate_range_kbps.second));
            PowerBand band;
            band.resolution = res;
            band.frame_rate = fps;
            band.low_w = std::min(at_min, at_max);
            band.high_w = std::max(at_min, at_max);
            bands.push_back(band);
        }
    }
    return bands;
}

}  // namespace streampower
