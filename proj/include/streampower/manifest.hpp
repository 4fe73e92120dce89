#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace streampower {

inline constexpr std::string_view kToolVersion = "1.0.0";
inline constexpr std::string_view kProfileBundleVersion = "builtin-1";

// Provenance block embedded in (or written alongside) every output artifact.
struct RunManifest {
    std::string command;
    std::vector<std::string> inputs;
    std::string config_digest;
    std::vector<std::string> profile_labels;
    std::optional<std::uint64_t> seed;
    std::string timestamp;  // RFC 3339 UTC; honors SOURCE_DATE_EPOCH
    std::string tool_version{kToolVersion};

    nlohmann::ordered_json to_json() const;
    void write_sidecar(const std::filesystem::path& artifact) const;
};

// Current UTC time; SOURCE_DATE_EPOCH overrides it for reproducible outputs.
std::string current_timestamp_rfc3339();

std::uint64_t fnv1a64(std::string_view text);
std::string hex64(std::uint64_t value);

}  // namespace streampower
