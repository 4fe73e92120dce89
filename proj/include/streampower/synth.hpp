#pragma once

#include <cstdint>
#include <vector>

#include "streampower/qoe.hpp"
#include "streampower/sessions.hpp"

namespace streampower {

struct ResolutionClass {
    int width = 0;
    int height = 0;
    double weight = 0.0;
    double bitrate_lo_kbps = 0.0;
    double bitrate_hi_kbps = 0.0;
};

// Defaults mimic a desktop/laptop streaming population: half laptops, 87% VP9,
// a ladder skewed towards HD so predicted powers land in the devices'
// measured envelopes, durations log-normal with 330 s mean and 286 s IQR,
// and one sub-second stall for 22% of sessions.
struct SynthConfig {
    std::size_t n_sessions = 10'000;
    std::uint64_t seed = 1;
    double laptop_share = 0.5;
    double vp9_share = 0.87;
    std::vector<ResolutionClass> resolutions = default_resolution_classes();
    std::vector<double> frame_rates{24, 25, 30, 50, 60};
    std::vector<double> frame_rate_weights{0.05, 0.05, 0.30, 0.25, 0.35};
    double duration_log_mean = 5.371376129115309;   // ln seconds
    double duration_log_sigma = 0.9248962377966694;
    double stall_share = 0.22;
    double audio_bitrate_kbps = 128.0;
    double initial_delay_mean_s = 2.0;
    StubEstimatorParams qoe_stub;

    static std::vector<ResolutionClass> default_resolution_classes();
    void validate() const;  // throws ConfigError
};

// Deterministic per seed; every emitted record passes session validation and
// carries a stub-estimated MOS.
SessionDataset generate_sessions(const SynthConfig& config);

}  // namespace streampower
