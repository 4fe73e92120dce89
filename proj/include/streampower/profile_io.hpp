#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "streampower/manifest.hpp"
#include "streampower/power_model.hpp"

namespace streampower {

// Profile document: named coefficient fields, units as trained (W, W/fps,
// W/pps, W/kbps, W/kbps, W, W). A null online_offset marks it not applicable.
nlohmann::ordered_json profile_to_json(const DeviceProfile& profile);
DeviceProfile profile_from_json(const nlohmann::json& document);

// Bundle files hold {"profiles": [...]} plus an embedded manifest; a bare
// profile object is also accepted on load.
void write_profiles(std::span<const DeviceProfile> profiles,
                    const std::filesystem::path& path, const RunManifest& manifest);
std::vector<DeviceProfile> load_profiles(const std::filesystem::path& path);

}  // namespace streampower
