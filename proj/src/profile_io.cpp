#include "streampower/profile_io.hpp"

#include <array>
#include <cmath>
#include <fstream>
#include <limits>

#include "streampower/errors.hpp"

namespace streampower {

namespace {

// On-disk coefficient field names, in variable order.
constexpr std::array<std::string_view, kVariableCount> kProfileKeys{
    "constant",       "frame_rate",    "pixels_per_second", "video_bitrate",
    "online_bitrate", "online_offset", "codec"};

}  // namespace

nlohmann::ordered_json profile_to_json(const DeviceProfile& profile) {
    if (profile.coefficients.size() != kVariableCount) {
        throw StructuralError("profile '" + profile.label + "' has " +
                              std::to_string(profile.coefficients.size()) +
                              " coefficients, expected " + std::to_string(kVariableCount));
    }
    nlohmann::ordered_json j;
    j["device"] = to_string(profile.device);
    j["label"] = profile.label;
    nlohmann::ordered_json coefficients;
    for (std::size_t i = 0; i < kVariableCount; ++i) {
        if (kProfileKeys[i] == "online_offset" && !profile.online_offset_applicable) {
            coefficients[std::string(kProfileKeys[i])] = nullptr;
        } else {
            coefficients[std::string(kProfileKeys[i])] = profile.coefficients[i];
        }
    }
    j["coefficients"] = coefficients;
    nlohmann::ordered_json v_max;
    for (std::size_t i = 0; i < kVariableCount; ++i) {
        if (!std::isnan(profile.v_max[i])) {
            v_max[std::string(kProfileKeys[i])] = profile.v_max[i];
        }
    }
    j["v_max"] = v_max;
    return j;
}

DeviceProfile profile_from_json(const nlohmann::json& document) {
    if (!document.is_object()) throw SchemaError("profile document is not a JSON object");
    const auto device_it = document.find("device");
    if (device_it == document.end() || !device_it->is_string()) {
        throw SchemaError("profile document is missing a 'device' string");
    }
    DeviceProfile profile;
    profile.device = parse_device_kind(device_it->get<std::string>());
    if (const auto label = document.find("label"); label != document.end() && label->is_string()) {
        profile.label = label->get<std::string>();
    }

    const auto coefficients_it = document.find("coefficients");
    if (coefficients_it == document.end() || !coefficients_it->is_object()) {
        throw SchemaError("profile document is missing a 'coefficients' object");
    }
    profile.coefficients.assign(kVariableCount, 0.0);
    profile.online_offset_applicable = true;
    for (std::size_t i = 0; i < kVariableCount; ++i) {
        const auto key = std::string(kProfileKeys[i]);
        const auto value = coefficients_it->find(key);
        if (value == coefficients_it->end()) {
            throw SchemaError("profile coefficients are missing '" + key + "'");
        }
        if (key == "online_offset" && value->is_null()) {
            profile.coefficients[i] = 0.0;
            profile.online_offset_applicable = false;
            continue;
        }
        if (!value->is_number()) {
            throw SchemaError("profile coefficient '" + key + "' is not a number");
        }
        profile.coefficients[i] = value->get<double>();
    }

    profile.v_max = default_v_max();
    if (const auto v_max_it = document.find("v_max");
        v_max_it != document.end() && v_max_it->is_object()) {
        for (std::size_t i = 0; i < kVariableCount; ++i) {
            const auto value = v_max_it->find(std::string(kProfileKeys[i]));
            if (value == v_max_it->end() || value->is_null()) {
                profile.v_max[i] = std::numeric_limits<double>::quiet_NaN();
            } else if (value->is_number()) {
                profile.v_max[i] = value->get<double>();
            } else {
                throw SchemaError("profile v_max entry '" + std::string(kProfileKeys[i]) +
                                  "' is not a number");
            }
        }
    }
    return profile;
}

void write_profiles(std::span<const DeviceProfile> profiles,
                    const std::filesystem::path& path, const RunManifest& manifest) {
    nlohmann::ordered_json bundle;
    bundle["profiles"] = nlohmann::ordered_json::array();
    for (const DeviceProfile& profile : profiles) {
        bundle["profiles"].push_back(profile_to_json(profile));
    }
    bundle["manifest"] = manifest.to_json();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out << bundle.dump(2) << '\n';
}

std::vector<DeviceProfile> load_profiles(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    nlohmann::json document;
    try {
        document = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw SchemaError("'" + path.string() + "' is not valid JSON: " + e.what());
    }
    std::vector<DeviceProfile> profiles;
    if (document.is_object() && document.contains("profiles")) {
        if (!document["profiles"].is_array()) {
            throw SchemaError("'profiles' must be an array");
        }
        for (const auto& entry : document["profiles"]) {
            profiles.push_back(profile_from_json(entry));
        }
    } else {
        profiles.push_back(profile_from_json(document));
    }
    if (profiles.empty()) {
        throw SchemaError("'" + path.string() + "' contains no profiles");
    }
    return profiles;
}

}  // namespace streampower
