#include "streampower/synth.hpp"

#include <cmath>
#include <string>

#include "streampower/errors.hpp"
#include "streampower/random.hpp"

namespace streampower {

namespace {

// Independent stream per field family: adding a field never perturbs the
// draws of existing fields.
enum StreamTag : std::uint64_t {
    kDeviceStream = 1,
    kCodecStream,
    kResolutionStream,
    kFrameRateStream,
    kBitrateStream,
    kDurationStream,
    kStallStream,
    kDelayStream,
};

std::string session_name(std::size_t index) {
    std::string digits = std::to_string(index);
    if (digits.size() < 6) digits.insert(0, 6 - digits.size(), '0');
    return "s" + digits;
}

}  // namespace

std::vector<ResolutionClass> SynthConfig::default_resolution_classes() {
    return {
        {256, 144, 0.01, 80, 200},     {426, 240, 0.02, 150, 400},
        {640, 360, 0.05, 250, 800},    {854, 480, 0.07, 500, 1500},
        {1280, 720, 0.40, 1000, 3500}, {1920, 1080, 0.45, 1800, 6000},
    };
}

void SynthConfig::validate() const {
    if (laptop_share < 0.0 || laptop_share > 1.0) {
        throw ConfigError("laptop share must lie in [0, 1]");
    }
    if (vp9_share < 0.0 || vp9_share > 1.0) {
        throw ConfigError("vp9 share must lie in [0, 1]");
    }
    if (resolutions.empty()) throw ConfigError("at least one resolution class required");
    double resolution_weight = 0.0;
    for (const ResolutionClass& r : resolutions) {
        if (r.width <= 0 || r.height <= 0) throw ConfigError("resolution dimensions must be positive");
        if (r.weight < 0.0) throw ConfigError("resolution weights must be non-negative");
        if (!(r.bitrate_lo_kbps >= 0.0) || r.bitrate_lo_kbps > r.bitrate_hi_kbps) {
            throw ConfigError("resolution bitrate range is inverted");
        }
        resolution_weight += r.weight;
    }
    if (std::abs(resolution_weight - 1.0) > 1e-6) {
        throw ConfigError("resolution weights must sum to 1");
    }
    if (frame_rates.empty() || frame_rates.size() != frame_rate_weights.size()) {
        throw ConfigError("frame rate values and weights must align");
    }
    double fps_weight = 0.0;
    for (const double w : frame_rate_weights) {
        if (w < 0.0) throw ConfigError("frame rate weights must be non-negative");
        fps_weight += w;
    }
    if (std::abs(fps_weight - 1.0) > 1e-6) {
        throw ConfigError("frame rate weights must sum to 1");
    }
    if (!(duration_log_sigma >= 0.0)) throw ConfigError("duration sigma must be non-negative");
    if (stall_share < 0.0 || stall_share > 1.0) throw ConfigError("stall share must lie in [0, 1]");
    if (audio_bitrate_kbps < 0.0) throw ConfigError("audio bitrate must be non-negative");
    if (initial_delay_mean_s < 0.0) throw ConfigError("initial delay mean must be non-negative");
    qoe_stub.validate();
}

SessionDataset generate_sessions(const SynthConfig& config) {
    config.validate();

    RandomStream device_stream(mix_seed(config.seed, kDeviceStream));
    RandomStream codec_stream(mix_seed(config.seed, kCodecStream));
    RandomStream resolution_stream(mix_seed(config.seed, kResolutionStream));
    RandomStream fps_stream(mix_seed(config.seed, kFrameRateStream));
    RandomStream bitrate_stream(mix_seed(config.seed, kBitrateStream));
    RandomStream duration_stream(mix_seed(config.seed, kDurationStream));
    RandomStream stall_stream(mix_seed(config.seed, kStallStream));
    RandomStream delay_stream(mix_seed(config.seed, kDelayStream));

    std::vector<double> resolution_weights;
    resolution_weights.reserve(config.resolutions.size());
    for (const ResolutionClass& r : config.resolutions) resolution_weights.push_back(r.weight);

    const QoeSource qoe = QoeSource::stub(config.qoe_stub);

    SessionDataset dataset;
    dataset.source_label = "synth-seed" + std::to_string(config.seed);
    dataset.records.reserve(config.n_sessions);

    for (std::size_t i = 0; i < config.n_sessions; ++i) {
        SessionRecord record;
        record.session_id = session_name(i);
        record.device = device_stream.bernoulli(config.laptop_share) ? DeviceKind::Laptop
                                                                     : DeviceKind::DesktopPC;
        record.codec = codec_stream.bernoulli(config.vp9_share) ? Codec::Vp9 : Codec::H264;

        const ResolutionClass& res =
            config.resolutions[resolution_stream.weighted(resolution_weights)];
        record.width = res.width;
        record.height = res.height;
        record.frame_rate = config.frame_rates[fps_stream.weighted(config.frame_rate_weights)];
        record.video_bitrate_kbps = bitrate_stream.uniform(res.bitrate_lo_kbps, res.bitrate_hi_kbps);
        record.audio_bitrate_kbps = config.audio_bitrate_kbps;

        record.duration_s =
            std::exp(config.duration_log_mean + config.duration_log_sigma * duration_stream.normal());

        const bool stalled = stall_stream.bernoulli(config.stall_share);
        const double stall_length = stall_stream.uniform(0.1, 0.9);
        if (stalled) {
            record.stalling_events = 1;
            record.stalling_total_s = stall_length;
        }
        record.initial_delay_s = delay_stream.exponential(config.initial_delay_mean_s);

        record.mos = qoe.mos_for(record);
        record.validate();
        dataset.records.push_back(std::move(record));
    }

    dataset.stats.total_rows = config.n_sessions;
    dataset.stats.accepted = config.n_sessions;
    return dataset;
}

}  // namespace streampower
