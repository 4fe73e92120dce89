#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <cmath>
#include <limits>
#include <vector>

#include "oracles.hpp"
#include "streampower/errors.hpp"
#include "streampower/power_model.hpp"

using namespace streampower;

namespace {

VariableVector make_vector(double fps, double pps, double bv, double bonline, double flag,
                           double codec) {
    VariableVector v;
    v.frame_rate = fps;
    v.pixels_per_second = pps;
    v.video_bitrate_kbps = bv;
    v.online_bitrate_kbps = bonline;
    v.online_flag = flag;
    v.codec = codec;
    return v;
}

const DeviceProfile& laptop() { return builtin_profiles().at(DeviceKind::Laptop); }
const DeviceProfile& desktop() { return builtin_profiles().at(DeviceKind::DesktopPC); }

}  // namespace

TEST_CASE("device and codec names round-trip, unknown kinds rejected") {
    CHECK(parse_device_kind("laptop") == DeviceKind::Laptop);
    CHECK(parse_device_kind("PC") == DeviceKind::DesktopPC);
    CHECK(parse_codec("h264") == Codec::H264);
    CHECK(parse_codec("H.264") == Codec::H264);
    CHECK(parse_codec("VP9") == Codec::Vp9);
    CHECK(to_string(DeviceKind::Laptop) == "laptop");
    CHECK(to_string(Codec::Vp9) == "vp9");
    CHECK_THROWS_AS(parse_device_kind("tablet"), ValidationError);
    CHECK_THROWS_AS(parse_codec("av1"), ValidationError);
    // the binary encoding is part of the contract
    CHECK(static_cast<int>(Codec::H264) == 0);
    CHECK(static_cast<int>(Codec::Vp9) == 1);
}

TEST_CASE("variable vector validation") {
    VariableVector v = make_vector(30, 62'208'000, 2000, 2200, 1, 1);
    CHECK_NOTHROW(v.validate());

    SUBCASE("constant must be 1") {
        v.constant = 0.0;
        CHECK_THROWS_AS(v.validate(), ValidationError);
    }
    SUBCASE("frame rate range") {
        v.frame_rate = 241.0;
        CHECK_THROWS_AS(v.validate(), ValidationError);
        v.frame_rate = -1.0;
        CHECK_THROWS_AS(v.validate(), ValidationError);
    }
    SUBCASE("online bitrate below video bitrate while online") {
        v.online_bitrate_kbps = 1999.0;
        CHECK_THROWS_AS(v.validate(), ValidationError);
        v.online_flag = 0.0;  // offline: no constraint between the two
        CHECK_NOTHROW(v.validate());
    }
    SUBCASE("negative physical fields") {
        v.pixels_per_second = -1.0;
        CHECK_THROWS_AS(v.validate(), ValidationError);
    }
    SUBCASE("flags are binary") {
        v.online_flag = 0.5;
        CHECK_THROWS_AS(v.validate(), ValidationError);
        v.online_flag = 1.0;
        v.codec = 2.0;
        CHECK_THROWS_AS(v.validate(), ValidationError);
    }
}

TEST_CASE("builtin profiles carry the trained coefficients") {
    CHECK(laptop().coefficients[0] == 8.52);
    CHECK(laptop().coefficients[1] == 0.035);
    CHECK(laptop().coefficients[2] == 5.76e-9);
    CHECK(desktop().coefficients[4] == -5.28e-5);
    CHECK(desktop().coefficients[6] == -5.73);
    CHECK(laptop().online_offset_applicable);
    CHECK_FALSE(desktop().online_offset_applicable);
    CHECK(desktop().coefficients[5] == 0.0);
}

TEST_CASE("predict_power reproduces the worked examples") {
    // constant offset alone
    const VariableVector idle = make_vector(0, 0, 0, 0, 0, 0);
    CHECK(predict_power(laptop(), idle) == doctest::Approx(8.52).epsilon(1e-12));

    const VariableVector lap_v = make_vector(30, 62'208'000, 2000, 2200, 1, 1);
    const double lap_power = predict_power(laptop(), lap_v);
    CHECK(std::abs(lap_power - 15.3235) < 1e-3);
    // independent high-precision route
    CHECK(std::abs(lap_power - oracles::dot_long_double(laptop().coefficients,
                                                        lap_v.as_array())) < 1e-12);

    const VariableVector pc_v = make_vector(60, 124'416'000, 4000, 4200, 0, 1);
    const double pc_power = predict_power(desktop(), pc_v);
    CHECK(std::abs(pc_power - 88.194) < 1e-3);
    CHECK(std::abs(pc_power - oracles::dot_long_double(desktop().coefficients,
                                                       pc_v.as_array())) < 1e-12);

    CHECK(lap_power > 0.0);
    CHECK(pc_power > 0.0);
}

TEST_CASE("predict_power error paths") {
    SUBCASE("PC profile rejects online vectors") {
        const VariableVector online = make_vector(30, 62'208'000, 2000, 2200, 1, 0);
        CHECK_THROWS_AS(predict_power(desktop(), online), ValidationError);
    }
    SUBCASE("coefficient dimension mismatch") {
        DeviceProfile broken = laptop();
        broken.coefficients.resize(6);
        const VariableVector v = make_vector(30, 62'208'000, 2000, 2200, 1, 0);
        CHECK_THROWS_AS(predict_power(broken, v), StructuralError);
    }
}

TEST_CASE("impact table matches trained maxima") {
    const ImpactTable lap = impact_table(laptop());
    // frame rate: coefficient 0.035 at 60 Hz; the printed 2.12 W is a rounded cell
    CHECK(lap.entries[1].impact_w == doctest::Approx(2.10).epsilon(1e-9));
    CHECK(std::abs(lap.entries[1].impact_w - 2.12) < 0.03);
    CHECK(lap.entries[0].impact_w == doctest::Approx(8.52));  // constant's impact is itself

    const ImpactTable pc = impact_table(desktop());
    CHECK(pc.entries[6].impact_w == -5.73);
    CHECK_FALSE(pc.entries[5].applicable);
    CHECK(pc.entries[5].impact_w == 0.0);

    SUBCASE("zero maximum yields zero impact") {
        DeviceProfile p = laptop();
        p.v_max[3] = 0.0;
        CHECK(impact_table(p).entries[3].impact_w == 0.0);
    }
    SUBCASE("missing v_max is a configuration error") {
        DeviceProfile p = laptop();
        p.v_max[2] = std::numeric_limits<double>::quiet_NaN();
        CHECK_THROWS_AS(impact_table(p), ConfigError);
    }
}

TEST_CASE("builtin impacts reproduce every printed table cell") {
    // printed cells: value and decimals of the printed representation
    struct Cell { std::size_t index; double printed; double last_place; };
    const std::vector<Cell> laptop_cells{
        {0, 8.52, 0.01}, {1, 2.12, 0.01}, {2, 0.72, 0.01}, {3, 0.13, 0.01},
        {4, 0.58, 0.01}, {5, 1.15, 0.01}, {6, 4.16, 0.01},
    };
    const std::vector<Cell> pc_cells{
        {0, 73.3, 0.1}, {1, 11.5, 0.1}, {2, 7.82, 0.01}, {3, 7.29, 0.01},
        {4, -0.95, 0.01}, {6, -5.73, 0.01},
    };
    auto check_cells = [](const ImpactTable& table, const std::vector<Cell>& cells) {
        for (const Cell& cell : cells) {
            const double computed = table.entries[cell.index].impact_w;
            const double tolerance = std::max(0.02 * std::abs(cell.printed), cell.last_place / 2);
            INFO("variable ", table.entries[cell.index].variable, " computed ", computed,
                 " printed ", cell.printed);
            CHECK(std::abs(computed - cell.printed) <= tolerance);
        }
    };
    check_cells(impact_table(laptop()), laptop_cells);
    check_cells(impact_table(desktop()), pc_cells);
}

TEST_CASE("power bands") {
    const std::array<Resolution, 1> res{{{1920, 1080}}};
    const std::array<double, 1> fps{30.0};

    SUBCASE("degenerate bitrate range gives zero width") {
        const auto bands = power_bands(laptop(), Codec::H264, res, fps, {2000.0, 2000.0});
        REQUIRE(bands.size() == 1);
        CHECK(bands[0].low_w == bands[0].high_w);
    }
    SUBCASE("band width follows the combined bitrate coefficients") {
        const auto bands = power_bands(laptop(), Codec::H264, res, fps, {500.0, 4000.0}, true);
        REQUIRE(bands.size() == 1);
        const double expected = (6.97e-6 + 3.24e-5) * 3500.0;
        CHECK(bands[0].high_w - bands[0].low_w == doctest::Approx(expected).epsilon(1e-9));
    }
    SUBCASE("PC bands sit strictly above laptop bands") {
        const std::array<Resolution, 2> rr{{{1280, 720}, {1920, 1080}}};
        const std::array<double, 3> ff{24.0, 30.0, 60.0};
        const auto lap_bands = power_bands(laptop(), Codec::Vp9, rr, ff, {500.0, 4000.0});
        const auto pc_bands = power_bands(desktop(), Codec::Vp9, rr, ff, {500.0, 4000.0});
        REQUIRE(lap_bands.size() == pc_bands.size());
        for (std::size_t i = 0; i < lap_bands.size(); ++i) {
            CHECK(pc_bands[i].low_w > lap_bands[i].high_w);
        }
    }
    SUBCASE("empty inputs are rejected") {
        CHECK_THROWS_AS(power_bands(laptop(), Codec::H264, {}, fps, {1.0, 2.0}), ValidationError);
        CHECK_THROWS_AS(power_bands(laptop(), Codec::H264, res, {}, {1.0, 2.0}), ValidationError);
        CHECK_THROWS_AS(power_bands(laptop(), Codec::H264, res, fps, {4.0, 2.0}), ValidationError);
    }
}

TEST_CASE("power is affine in each variable") {
    const VariableVector base = make_vector(30, 62'208'000, 1000, 2000, 1, 0);
    struct Axis { double VariableVector::* field; double step; };
    const std::vector<Axis> axes{
        {&VariableVector::frame_rate, 10.0},
        {&VariableVector::pixels_per_second, 1e7},
        {&VariableVector::video_bitrate_kbps, 150.0},
        {&VariableVector::online_bitrate_kbps, 150.0},
    };
    for (const Axis& axis : axes) {
        VariableVector lo = base, mid = base, hi = base;
        mid.*(axis.field) += axis.step;
        hi.*(axis.field) += 2 * axis.step;
        const double p0 = predict_power(laptop(), lo);
        const double p1 = predict_power(laptop(), mid);
        const double p2 = predict_power(laptop(), hi);
        CHECK(p1 == doctest::Approx((p0 + p2) / 2).epsilon(1e-12));
    }
}

TEST_CASE("monotonicity follows coefficient signs") {
    const VariableVector base = make_vector(30, 62'208'000, 1000, 1200, 0, 1);
    // PC online-bitrate coefficient is negative: raising it must not raise power
    VariableVector more_online = base;
    more_online.online_bitrate_kbps += 500.0;
    CHECK(predict_power(desktop(), more_online) < predict_power(desktop(), base));
    // laptop codec coefficient is positive
    VariableVector h264 = base;
    h264.online_flag = 1.0;
    VariableVector vp9 = h264;
    h264.codec = 0.0;
    vp9.codec = 1.0;
    CHECK(predict_power(laptop(), vp9) > predict_power(laptop(), h264));
}

TEST_CASE("bundled profiles stay inside the measured envelopes") {
    // 720p-1080p, 24-60 fps, <= 4 Mbps; +-10% slack at the envelope edges
    const std::array<Resolution, 2> resolutions{{{1280, 720}, {1920, 1080}}};
    const std::array<double, 4> rates{24.0, 30.0, 50.0, 60.0};
    const std::array<double, 4> bitrates{100.0, 1000.0, 2500.0, 4000.0};
    for (const Resolution& res : resolutions) {
        for (const double fps : rates) {
            for (const double bitrate : bitrates) {
                for (const int codec : {0, 1}) {
                    VariableVector v = make_vector(
                        fps, static_cast<double>(res.width) * res.height * fps, bitrate,
                        bitrate, 1, codec);
                    const double lap_power = predict_power(laptop(), v);
                    CHECK(lap_power >= 10.0 * 0.9);
                    CHECK(lap_power <= 20.0 * 1.1);
                    v.online_flag = 0.0;
                    const double pc_power = predict_power(desktop(), v);
                    CHECK(pc_power >= 80.0 * 0.9);
                    CHECK(pc_power <= 110.0 * 1.1);
                }
            }
        }
    }
}

TEST_CASE("bands swap endpoints when the combined bitrate effect is negative") {
    DeviceProfile draining = laptop();
    draining.coefficients[3] = -1e-4;
    draining.coefficients[4] = -5e-5;
    const std::array<Resolution, 1> res{{{1280, 720}}};
    const std::array<double, 1> fps{30.0};
    const auto bands = power_bands(draining, Codec::H264, res, fps, {500.0, 4000.0}, true);
    REQUIRE(bands.size() == 1);
    CHECK(bands[0].low_w <= bands[0].high_w);
    // the cheaper end is now the higher bitrate
    CHECK(bands[0].high_w - bands[0].low_w == doctest::Approx(1.5e-4 * 3500.0).epsilon(1e-9));
}
