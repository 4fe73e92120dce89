#include "streampower/qoe.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "streampower/errors.hpp"

namespace streampower {

void StubEstimatorParams::validate() const {
    if (!(bitrate_half_point_kbps > 0.0)) {
        throw ConfigError("bitrate half point must be positive");
    }
    if (resolution_exponent < 0.0) {
        throw ConfigError("resolution exponent must be non-negative");
    }
    if (stall_penalty_per_event < 0.0 || stall_penalty_per_second < 0.0 ||
        initial_delay_penalty_per_second < 0.0) {
        throw ConfigError("stub penalties must be non-negative");
    }
}

QoeSource QoeSource::provided() { return QoeSource(); }

QoeSource QoeSource::stub(StubEstimatorParams params) {
    params.validate();
    QoeSource source;
    source.stub_ = params;
    return source;
}

double QoeSource::mos_for(const SessionRecord& record) const {
    if (!stub_) {
        if (!record.mos) {
            throw MissingMosError("session '" + record.session_id +
                                  "' carries no MOS value but the provided source was selected");
        }
        return *record.mos;
    }
    const StubEstimatorParams& p = *stub_;
    const double bitrate = record.video_bitrate_kbps;
    const double bitrate_term = bitrate / (bitrate + p.bitrate_half_point_kbps);
    const double resolution_term =
        std::pow(std::min(static_cast<double>(record.height) / 1080.0, 1.0),
                 p.resolution_exponent);
    double mos = 1.0 + 4.0 * bitrate_term * resolution_term;
    mos -= p.stall_penalty_per_event * static_cast<double>(record.stalling_events);
    mos -= p.stall_penalty_per_second * record.stalling_total_s;
    mos -= p.initial_delay_penalty_per_second * record.initial_delay_s;
    return std::clamp(mos, 1.0, 5.0);
}

std::string QoeSource::describe() const {
    if (!stub_) return "provided";
    std::ostringstream out;
    out << "stub(half_point=" << stub_->bitrate_half_point_kbps
        << "kbps, resolution_exponent=" << stub_->resolution_exponent
        << ", stall_event=" << stub_->stall_penalty_per_event
        << ", stall_s=" << stub_->stall_penalty_per_second
        << ", delay_s=" << stub_->initial_delay_penalty_per_second << ")";
    return out.str();
}

}  // namespace streampower
