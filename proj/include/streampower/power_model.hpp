#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace streampower {

enum class DeviceKind { Laptop, DesktopPC };

// Binary codec variable: the numeric encoding is part of the model contract.
enum class Codec { H264 = 0, Vp9 = 1 };

std::string_view to_string(DeviceKind kind);
std::string_view to_string(Codec codec);
std::optional<DeviceKind> try_parse_device_kind(std::string_view text);
std::optional<Codec> try_parse_codec(std::string_view text);
DeviceKind parse_device_kind(std::string_view text);  // throws ValidationError
Codec parse_codec(std::string_view text);             // throws ValidationError

inline constexpr std::size_t kVariableCount = 7;

// Canonical variable ordering. Serialized formats use these names, never positions.
inline constexpr std::array<std::string_view, kVariableCount> kVariableNames{
    "constant",          "frame_rate",  "pixels_per_second", "video_bitrate_kbps",
    "online_bitrate_kbps", "online_flag", "codec"};

// One row of the design matrix: the streaming-process variables.
struct VariableVector {
    double constant = 1.0;
    double frame_rate = 0.0;           // Hz
    double pixels_per_second = 0.0;    // width * height * frame_rate
    double video_bitrate_kbps = 0.0;   // video stream only, mean over the sequence
    double online_bitrate_kbps = 0.0;  // video + audio + side information
    double online_flag = 0.0;          // {0,1}; always 0 for desktop PCs
    double codec = 0.0;                // 0 = H.264, 1 = VP9

    std::array<double, kVariableCount> as_array() const;
    void validate() const;  // throws ValidationError
};

// Trained coefficient vector for one device plus impact metadata.
// Immutable by convention after construction; safe to share across threads.
struct DeviceProfile {
    DeviceKind device = DeviceKind::Laptop;
    // Units per variable: W, W/fps, W/pps, W/kbps, W/kbps, W, W.
    std::vector<double> coefficients;
    // False for desktop PCs: the Wi-Fi idle offset does not exist there. The
    // coefficient slot is held at zero and predictions reject online_flag == 1.
    bool online_offset_applicable = true;
    // Per-variable maxima for impact computation; NaN marks an unset entry.
    std::array<double, kVariableCount> v_max{};
    std::string label;
};

std::array<double, kVariableCount> default_v_max();

struct ImpactEntry {
    std::string_view variable;
    double coefficient = 0.0;
    double v_max = 0.0;
    double impact_w = 0.0;
    bool applicable = true;
};

struct ImpactTable {
    DeviceKind device = DeviceKind::Laptop;
    std::string label;
    std::array<ImpactEntry, kVariableCount> entries{};
};

// Mean electrical power of the device for one variable vector, in watts.
double predict_power(const DeviceProfile& profile, const VariableVector& v);

// Per-variable maximum impact: coefficient times the variable's maximum.
ImpactTable impact_table(const DeviceProfile& profile);

// Bundled trained profiles for the two reference devices.
const std::map<DeviceKind, DeviceProfile>& builtin_profiles();

struct Resolution {
    int width = 0;
    int height = 0;
};

// Predicted power at the two ends of a bitrate range, one band per
// (resolution, frame rate) pair. low_w <= high_w always holds.
struct PowerBand {
    Resolution resolution;
    double frame_rate = 0.0;
    double low_w = 0.0;
    double high_w = 0.0;
};

// `online` selects the Internet-connection state for the swept vectors;
// unset picks the device default (laptop online, PC wired/offline flag).
std::vector<PowerBand> power_bands(const DeviceProfile& profile, Codec codec,
                                   std::span<const Resolution> resolutions,
                                   std::span<const double> frame_rates,
                                   std::pair<double, double> bitrate_range_kbps,
                                   std::optional<bool> online = std::nullopt);

}  // namespace streampower
