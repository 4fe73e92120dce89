#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "streampower/errors.hpp"
#include "streampower/qoe.hpp"
#include "streampower/random.hpp"

using namespace streampower;

namespace {

SessionRecord clean_1080p(double bitrate_kbps) {
    SessionRecord r;
    r.session_id = "q";
    r.device = DeviceKind::Laptop;
    r.codec = Codec::Vp9;
    r.width = 1920;
    r.height = 1080;
    r.frame_rate = 30.0;
    r.video_bitrate_kbps = bitrate_kbps;
    r.audio_bitrate_kbps = 128.0;
    r.duration_s = 300.0;
    return r;
}

}  // namespace

TEST_CASE("provided mode is an identity on the mos field") {
    SessionRecord r = clean_1080p(2000.0);
    r.mos = 4.12;
    const QoeSource source = QoeSource::provided();
    CHECK(source.mos_for(r) == 4.12);
    CHECK(source.is_provided());
    CHECK(source.describe() == "provided");

    r.mos.reset();
    CHECK_THROWS_AS(source.mos_for(r), MissingMosError);
}

TEST_CASE("stub hits its closed-form anchors") {
    const QoeSource stub = QoeSource::stub();
    SUBCASE("half-point bitrate at full resolution gives exactly 3") {
        CHECK(stub.mos_for(clean_1080p(1000.0)) == doctest::Approx(3.0).epsilon(1e-12));
    }
    SUBCASE("very high bitrate saturates at 5") {
        CHECK(stub.mos_for(clean_1080p(1e9)) == doctest::Approx(5.0).epsilon(1e-6));
    }
    SUBCASE("impairments subtract per event and per second") {
        SessionRecord r = clean_1080p(1000.0);
        r.stalling_events = 1;
        r.stalling_total_s = 0.5;
        r.initial_delay_s = 2.0;
        // 3.0 - 0.3 - 0.025 - 0.04
        CHECK(stub.mos_for(r) == doctest::Approx(2.635).epsilon(1e-12));
    }
}

TEST_CASE("stub is monotone in quality drivers and impairments") {
    const QoeSource stub = QoeSource::stub();
    RandomStream rng(2024);
    for (int trial = 0; trial < 200; ++trial) {
        SessionRecord r = clean_1080p(rng.uniform(100.0, 8000.0));
        r.height = static_cast<int>(rng.uniform(144.0, 2160.0));
        r.width = r.height * 16 / 9;
        r.stalling_events = static_cast<int>(rng.below(4));
        r.stalling_total_s = rng.uniform(0.0, 5.0);
        r.initial_delay_s = rng.uniform(0.0, 10.0);
        const double base = stub.mos_for(r);

        SessionRecord better = r;
        better.video_bitrate_kbps += 500.0;
        CHECK(stub.mos_for(better) >= base);

        better = r;
        better.height += 100;
        CHECK(stub.mos_for(better) >= base);

        SessionRecord worse = r;
        worse.stalling_events += 1;
        CHECK(stub.mos_for(worse) <= base);

        worse = r;
        worse.stalling_total_s += 1.0;
        CHECK(stub.mos_for(worse) <= base);

        worse = r;
        worse.initial_delay_s += 1.0;
        CHECK(stub.mos_for(worse) <= base);

        CHECK(base >= 1.0);
        CHECK(base <= 5.0);
    }
}

TEST_CASE("stub output clamps to the MOS scale under extreme inputs") {
    StubEstimatorParams heavy;
    heavy.stall_penalty_per_event = 10.0;
    const QoeSource punishing = QoeSource::stub(heavy);
    SessionRecord r = clean_1080p(4000.0);
    r.stalling_events = 5;
    CHECK(punishing.mos_for(r) == 1.0);

    const QoeSource plain = QoeSource::stub();
    SessionRecord tiny = clean_1080p(0.0);
    tiny.height = 1;
    tiny.width = 1;
    CHECK(plain.mos_for(tiny) >= 1.0);
}

TEST_CASE("stub parameters are validated") {
    StubEstimatorParams params;
    params.stall_penalty_per_event = -0.1;
    CHECK_THROWS_AS(QoeSource::stub(params), ConfigError);
    params = {};
    params.bitrate_half_point_kbps = 0.0;
    CHECK_THROWS_AS(QoeSource::stub(params), ConfigError);
}
