#pragma once

#include <optional>
#include <string>

#include "streampower/sessions.hpp"

namespace streampower {

// Surrogate estimator used when sessions carry no precomputed MOS. It is a
// test and pipeline stand-in, not a standardized quality model; reports label
// which source produced their scores.
struct StubEstimatorParams {
    double bitrate_half_point_kbps = 1000.0;
    double resolution_exponent = 0.5;
    double stall_penalty_per_event = 0.3;      // MOS
    double stall_penalty_per_second = 0.05;    // MOS/s
    double initial_delay_penalty_per_second = 0.02;  // MOS/s

    void validate() const;  // throws ConfigError
};

// Pluggable per-session MOS source: either the record's own value or the stub.
class QoeSource {
public:
    static QoeSource provided();
    static QoeSource stub(StubEstimatorParams params = {});

    // Provided mode is an exact identity on the record's mos; a missing value
    // raises MissingMosError. Stub output is clamped to [1, 5].
    double mos_for(const SessionRecord& record) const;

    bool is_provided() const { return !stub_.has_value(); }
    const StubEstimatorParams* stub_params() const { return stub_ ? &*stub_ : nullptr; }
    std::string describe() const;

private:
    QoeSource() = default;
    std::optional<StubEstimatorParams> stub_;
};

}  // namespace streampower
