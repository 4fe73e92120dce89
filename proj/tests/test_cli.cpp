#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>

#include <sys/wait.h>
#include <unistd.h>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "streampower/csvio.hpp"
#include "streampower/power_model.hpp"
#include "streampower/random.hpp"
#include "streampower/sessions.hpp"
#include "streampower/synth.hpp"
#include "streampower/trainer.hpp"

using namespace streampower;
namespace fs = std::filesystem;

namespace {

const char* cli_path() { return STREAMPOWER_CLI_PATH; }

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("streampower_cli_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter()++));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
    static int& counter() {
        static int value = 0;
        return value;
    }
};

int run(const std::string& command) {
    const int status = std::system(command.c_str());
    if (status < 0) return -1;
    return WEXITSTATUS(status);
}

int run_cli(const std::string& args, const fs::path& dir) {
    return run("cd '" + dir.string() + "' && '" + std::string(cli_path()) + "' " + args +
               " >cli_stdout.txt 2>cli_stderr.txt");
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

std::vector<std::vector<std::string>> read_csv(const fs::path& path) {
    std::ifstream in(path);
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        rows.push_back(csv::split_row(line));
    }
    return rows;
}

void write_worked_sessions(const fs::path& path) {
    SessionDataset dataset;
    SessionRecord r;
    r.session_id = "worked";
    r.device = DeviceKind::Laptop;
    r.codec = Codec::Vp9;
    r.width = 1920;
    r.height = 1080;
    r.frame_rate = 30.0;
    r.video_bitrate_kbps = 2000.0;
    r.audio_bitrate_kbps = 200.0;
    r.duration_s = 600.0;
    r.mos = 4.2;
    dataset.records.push_back(r);
    write_dataset_file(dataset, path);
}

}  // namespace

TEST_CASE("version flag names the tool and profile bundle") {
    TempDir dir;
    CHECK(run_cli("--version", dir.path) == 0);
    const std::string out = slurp(dir.path / "cli_stdout.txt");
    CHECK(out.find("streampower 1.0.0") != std::string::npos);
    CHECK(out.find("builtin-1") != std::string::npos);
}

TEST_CASE("synth output is byte-identical per seed") {
    TempDir dir;
    REQUIRE(run_cli("synth --n 300 --seed 5 --out a.csv", dir.path) == 0);
    REQUIRE(run_cli("synth --n 300 --seed 5 --out b.csv", dir.path) == 0);
    REQUIRE(run_cli("synth --n 300 --seed 6 --out c.csv", dir.path) == 0);
    CHECK(slurp(dir.path / "a.csv") == slurp(dir.path / "b.csv"));
    CHECK(slurp(dir.path / "a.csv") != slurp(dir.path / "c.csv"));
    CHECK(fs::exists(dir.path / "a.csv.manifest.json"));

    const auto manifest = nlohmann::json::parse(slurp(dir.path / "a.csv.manifest.json"));
    CHECK(manifest["command"] == "synth");
    CHECK(manifest["seed"] == 5);
    CHECK(manifest["tool_version"] == "1.0.0");
    CHECK(manifest.contains("config_digest"));
}

TEST_CASE("predict reproduces the worked example and keeps row counts") {
    TempDir dir;
    write_worked_sessions(dir.path / "one.csv");
    REQUIRE(run_cli("predict --sessions one.csv --out pred.csv", dir.path) == 0);
    const auto rows = read_csv(dir.path / "pred.csv");
    REQUIRE(rows.size() == 2);
    CHECK(rows[0][0] == "session_id");
    CHECK(rows[1][0] == "worked");
    const double power = csv::parse_double(rows[1][3]);
    CHECK(std::abs(power - 15.3235) < 1e-3);
    const double energy = csv::parse_double(rows[1][4]);
    CHECK(std::abs(energy - 4597.1) < 0.5);  // truncated to 300 s
    CHECK(csv::parse_double(rows[1][5]) == 4.2);

    SUBCASE("row count preserved on a synthetic batch") {
        REQUIRE(run_cli("synth --n 2000 --seed 9 --out batch.csv", dir.path) == 0);
        REQUIRE(run_cli("predict --sessions batch.csv --out batch_pred.csv", dir.path) == 0);
        CHECK(read_csv(dir.path / "batch_pred.csv").size() == 2001);
    }
    SUBCASE("empty dataset produces only the header") {
        SessionDataset empty;
        write_dataset_file(empty, dir.path / "empty.csv");
        REQUIRE(run_cli("predict --sessions empty.csv --out empty_pred.csv", dir.path) == 0);
        CHECK(read_csv(dir.path / "empty_pred.csv").size() == 1);
    }
}

TEST_CASE("fit round-trips a noiseless fixture through the CLI") {
    TempDir dir;
    const DeviceProfile& truth = builtin_profiles().at(DeviceKind::Laptop);
    MeasurementSet data;
    data.device = DeviceKind::Laptop;
    RandomStream rng(77);
    for (int i = 0; i < 60; ++i) {
        VariableVector v;
        v.frame_rate = rng.uniform(5.0, 120.0);
        v.pixels_per_second = rng.uniform(1e6, 3e8);
        v.video_bitrate_kbps = rng.uniform(100.0, 8000.0);
        v.online_flag = rng.bernoulli(0.5) ? 1.0 : 0.0;
        v.online_bitrate_kbps = v.online_flag == 1.0
                                     ? v.video_bitrate_kbps + rng.uniform(0.0, 4000.0)
                                     : rng.uniform(0.0, 8000.0);
        v.codec = rng.bernoulli(0.5) ? 1.0 : 0.0;
        data.rows.push_back({v, predict_power(truth, v)});
    }
    {
        std::ofstream out(dir.path / "meas.csv");
        write_measurements_csv(data, out);
    }
    REQUIRE(run_cli("fit --measurements meas.csv --device laptop --seed 4 "
                    "--out-profile prof.json --out-report report.json",
                    dir.path) == 0);

    const auto report = nlohmann::json::parse(slurp(dir.path / "report.json"));
    CHECK(report["mean_relative_error"].get<double>() < 1e-9);
    CHECK(report["per_fold_errors"].size() == 10);
    CHECK(report["folds"] == 10);
    CHECK(report["manifest"]["command"] == "fit");

    const auto bundle = nlohmann::json::parse(slurp(dir.path / "prof.json"));
    const auto& coefficients = bundle["profiles"][0]["coefficients"];
    CHECK(std::abs(coefficients["constant"].get<double>() - 8.52) < 1e-8);
    CHECK(std::abs(coefficients["codec"].get<double>() - 4.16) < 1e-8);

    SUBCASE("the emitted profile is loadable for prediction") {
        write_worked_sessions(dir.path / "one.csv");
        REQUIRE(run_cli("predict --sessions one.csv --profiles prof.json --out p.csv",
                        dir.path) == 0);
        const auto rows = read_csv(dir.path / "p.csv");
        CHECK(std::abs(csv::parse_double(rows[1][3]) - 15.3235) < 1e-3);
    }
}

TEST_CASE("fit exit codes distinguish failure classes") {
    TempDir dir;
    SUBCASE("collinear columns exit 3 and name the columns") {
        MeasurementSet data;
        data.device = DeviceKind::Laptop;
        RandomStream rng(5);
        for (int i = 0; i < 40; ++i) {
            VariableVector v;
            v.frame_rate = rng.uniform(5.0, 120.0);
            v.pixels_per_second = rng.uniform(1e6, 3e8);
            v.video_bitrate_kbps = rng.uniform(100.0, 8000.0);
            v.online_flag = 1.0;
            v.online_bitrate_kbps = v.video_bitrate_kbps;
            v.codec = rng.bernoulli(0.5) ? 1.0 : 0.0;
            data.rows.push_back({v, predict_power(builtin_profiles().at(DeviceKind::Laptop), v)});
        }
        std::ofstream out(dir.path / "collinear.csv");
        write_measurements_csv(data, out);
        out.close();
        CHECK(run_cli("fit --measurements collinear.csv --device laptop", dir.path) == 3);
        CHECK(slurp(dir.path / "cli_stderr.txt").find("bitrate") != std::string::npos);
    }
    SUBCASE("missing input exits 4") {
        CHECK(run_cli("fit --measurements nope.csv --device laptop", dir.path) == 4);
    }
    SUBCASE("wrong header exits 5") {
        std::ofstream out(dir.path / "bad.csv");
        out << "a,b\n1,2\n";
        out.close();
        CHECK(run_cli("fit --measurements bad.csv --device laptop", dir.path) == 5);
    }
    SUBCASE("unknown device exits 2") {
        std::ofstream out(dir.path / "empty.csv");
        out << "x\n";
        out.close();
        CHECK(run_cli("fit --measurements empty.csv --device toaster", dir.path) == 2);
    }
}

TEST_CASE("analyze emits the full artifact set with dominant frontier") {
    TempDir dir;
    REQUIRE(run_cli("synth --n 5000 --seed 11 --out s.csv", dir.path) == 0);
    REQUIRE(run_cli("analyze --sessions s.csv --qoe provided --out-dir out --svg", dir.path) ==
            0);

    const auto savings = nlohmann::json::parse(slurp(dir.path / "out" / "savings.json"));
    REQUIRE(savings["groups"].size() == 4);
    for (const auto& group : savings["groups"]) {
        CHECK(group["frontier_available"].get<bool>());
        CHECK(group["mean_delta_w"].get<double>() <= 0.0);
        CHECK(group["share_mos_ge_4"].get<double>() >= 0.0);
    }
    CHECK(savings["notes"][0].get<std::string>().find("delta_w") != std::string::npos);
    CHECK(savings["manifest"]["command"] == "analyze");
    CHECK(savings["ingest_stats"]["accepted"] == 5000);

    // every non-outlier session saves (delta <= 0 within tolerance)
    const auto rows = read_csv(dir.path / "out" / "savings_sessions.csv");
    REQUIRE(rows.size() > 4000);
    for (std::size_t i = 1; i < rows.size(); ++i) {
        CHECK(csv::parse_double(rows[i][4]) <= 1e-9);
    }

    const std::string table = slurp(dir.path / "out" / "savings_table.csv");
    CHECK(table.find("# Savings convention") != std::string::npos);
    CHECK(table.find("mean_delta_rel_pct") != std::string::npos);

    for (const char* name : {"frontier_laptop_vp9.csv", "density_pc_h264.csv",
                             "scatter_laptop_h264.svg"}) {
        CHECK(fs::exists(dir.path / "out" / name));
    }

    SUBCASE("density counts are conserved") {
        const auto density = read_csv(dir.path / "out" / "density_laptop_vp9.csv");
        REQUIRE(density.size() >= 3);
        long long total = 0;
        for (std::size_t i = 2; i < density.size(); ++i) {
            for (const std::string& cell : density[i]) total += csv::parse_integer(cell);
        }
        const auto groups = savings["groups"];
        long long expected = 0;
        for (const auto& g : groups) {
            if (g["device"] == "laptop" && g["codec"] == "vp9") {
                expected = g["sessions"].get<long long>();
            }
        }
        CHECK(total == expected);
    }
}

TEST_CASE("analyze marks tiny groups as frontier-unavailable") {
    TempDir dir;
    SessionDataset dataset;
    for (int i = 0; i < 2; ++i) {
        SessionRecord r;
        r.session_id = "t" + std::to_string(i);
        r.device = DeviceKind::Laptop;
        r.codec = Codec::H264;
        r.width = 1280;
        r.height = 720;
        r.frame_rate = 30.0;
        r.video_bitrate_kbps = 1000.0 + 100.0 * i;
        r.audio_bitrate_kbps = 128.0;
        r.duration_s = 100.0;
        r.mos = 3.5 + 0.2 * i;
        dataset.records.push_back(r);
    }
    write_dataset_file(dataset, dir.path / "tiny.csv");
    REQUIRE(run_cli("analyze --sessions tiny.csv --qoe provided --out-dir out", dir.path) == 0);
    const auto savings = nlohmann::json::parse(slurp(dir.path / "out" / "savings.json"));
    REQUIRE(savings["groups"].size() == 1);
    CHECK_FALSE(savings["groups"][0]["frontier_available"].get<bool>());
}

TEST_CASE("scenario identity matches analyze savings") {
    TempDir dir;
    REQUIRE(run_cli("synth --n 4000 --seed 21 --out s.csv", dir.path) == 0);
    REQUIRE(run_cli("analyze --sessions s.csv --qoe provided --out-dir out", dir.path) == 0);
    REQUIRE(run_cli("scenario --sessions s.csv --qoe provided "
                    "--map 'laptop:vp9->laptop:vp9' --map 'pc:vp9->laptop:h264' --out sc.json",
                    dir.path) == 0);

    const auto savings = nlohmann::json::parse(slurp(dir.path / "out" / "savings.json"));
    const auto scenario = nlohmann::json::parse(slurp(dir.path / "sc.json"));
    double expected_w = 0.0, expected_rel = 0.0;
    for (const auto& g : savings["groups"]) {
        if (g["device"] == "laptop" && g["codec"] == "vp9") {
            expected_w = g["mean_delta_w"].get<double>();
            expected_rel = g["mean_delta_rel"].get<double>();
        }
    }
    bool found_identity = false;
    for (const auto& s : scenario["scenarios"]) {
        if (s["source"] == "laptop:vp9" && s["target"] == "laptop:vp9") {
            found_identity = true;
            CHECK(s["mean_delta_w"].get<double>() == doctest::Approx(expected_w).epsilon(1e-12));
            CHECK(s["mean_delta_rel"].get<double>() ==
                  doctest::Approx(expected_rel).epsilon(1e-12));
        }
        if (s["source"] == "pc:vp9" && s["target"] == "laptop:h264") {
            // moving to the laptop frontier dwarfs staying on the PC one
            CHECK(s["mean_delta_w"].get<double>() < -20.0);
        }
    }
    CHECK(found_identity);

    SUBCASE("missing target frontier is a validation failure") {
        REQUIRE(run_cli("synth --n 500 --seed 3 --vp9-share 1.0 --out all_vp9.csv", dir.path) ==
                0);
        CHECK(run_cli("scenario --sessions all_vp9.csv --map 'laptop:vp9->laptop:h264' "
                      "--qoe provided --out x.json",
                      dir.path) == 2);
    }
}

TEST_CASE("provided-mode predict fails loudly on missing MOS") {
    TempDir dir;
    SessionDataset dataset;
    SessionRecord r;
    r.session_id = "nomos";
    r.device = DeviceKind::Laptop;
    r.codec = Codec::Vp9;
    r.width = 1280;
    r.height = 720;
    r.frame_rate = 30.0;
    r.video_bitrate_kbps = 900.0;
    r.audio_bitrate_kbps = 96.0;
    r.duration_s = 60.0;
    dataset.records.push_back(r);
    write_dataset_file(dataset, dir.path / "nomos.csv");
    CHECK(run_cli("predict --sessions nomos.csv --qoe provided --out p.csv", dir.path) == 2);
    CHECK(slurp(dir.path / "cli_stderr.txt").find("nomos") != std::string::npos);

    SUBCASE("the stub source fills the gap") {
        CHECK(run_cli("predict --sessions nomos.csv --qoe stub --out p.csv", dir.path) == 0);
        const auto rows = read_csv(dir.path / "p.csv");
        REQUIRE(rows.size() == 2);
        const double mos = csv::parse_double(rows[1][5]);
        CHECK(mos >= 1.0);
        CHECK(mos <= 5.0);
    }
}

TEST_CASE("reports are reproducible under a pinned timestamp") {
    TempDir dir;
    REQUIRE(run_cli("synth --n 500 --seed 31 --out s.csv", dir.path) == 0);
    const std::string pinned = "SOURCE_DATE_EPOCH=1700000000 '" + std::string(cli_path()) + "'";
    REQUIRE(run("cd '" + dir.path.string() + "' && " + pinned +
                " analyze --sessions s.csv --qoe provided --out-dir a >log 2>&1") == 0);
    REQUIRE(run("cd '" + dir.path.string() + "' && " + pinned +
                " analyze --sessions s.csv --qoe provided --out-dir b >log 2>&1") == 0);
    CHECK(slurp(dir.path / "a" / "savings.json") == slurp(dir.path / "b" / "savings.json"));
    const auto manifest = nlohmann::json::parse(slurp(dir.path / "a" / "savings.json"));
    CHECK(manifest["manifest"]["timestamp"] == "2023-11-14T22:13:20Z");
}

TEST_CASE("impact table CSV carries both devices and the N/A marker") {
    TempDir dir;
    REQUIRE(run_cli("impact --profile builtin --out-table t.csv --out-bands b.csv --svg v.svg",
                    dir.path) == 0);
    const auto rows = read_csv(dir.path / "t.csv");
    REQUIRE(rows.size() == 1 + kVariableCount);
    CHECK(rows[0][1] == "laptop_coefficient");
    CHECK(rows[0][4] == "pc_coefficient");
    bool found_na = false;
    for (const auto& row : rows) {
        if (row[0] == "online_flag") {
            CHECK(row[4] == "n/a");
            found_na = true;
        }
    }
    CHECK(found_na);
    CHECK(fs::exists(dir.path / "v.svg"));
    const auto bands = read_csv(dir.path / "b.csv");
    // 2 devices x 2 codecs x 3 resolutions x 4 frame rates
    CHECK(bands.size() == 1 + 48);
}

TEST_CASE("fit on a 2%-noise fixture reports the expected CV error band") {
    TempDir dir;
    const DeviceProfile& truth = builtin_profiles().at(DeviceKind::Laptop);
    MeasurementSet data;
    data.device = DeviceKind::Laptop;
    RandomStream rng(333);
    for (int i = 0; i < 200; ++i) {
        VariableVector v;
        v.frame_rate = rng.uniform(1.0, 240.0);
        v.pixels_per_second = rng.uniform(0.0, 8e8);
        v.video_bitrate_kbps = rng.uniform(100.0, 20000.0);
        v.online_flag = rng.bernoulli(0.5) ? 1.0 : 0.0;
        v.online_bitrate_kbps = v.online_flag == 1.0
                                     ? v.video_bitrate_kbps + rng.uniform(0.0, 20000.0)
                                     : rng.uniform(0.0, 20000.0);
        v.codec = rng.bernoulli(0.5) ? 1.0 : 0.0;
        const double power = predict_power(truth, v) * (1.0 + 0.02 * rng.normal());
        data.rows.push_back({v, power});
    }
    {
        std::ofstream out(dir.path / "noisy.csv");
        write_measurements_csv(data, out);
    }
    REQUIRE(run_cli("fit --measurements noisy.csv --device laptop --seed 8 "
                    "--out-report report.json",
                    dir.path) == 0);
    const auto report = nlohmann::json::parse(slurp(dir.path / "report.json"));
    const double pooled = report["mean_relative_error"].get<double>();
    CHECK(pooled >= 0.010);
    CHECK(pooled <= 0.022);
}

TEST_CASE("a constructed toy group reproduces the textbook frontier end to end") {
    TempDir dir;
    // bitrate-only profile: power in W equals video bitrate in Mbps
    {
        std::ofstream out(dir.path / "toy_profile.json");
        out << R"({"device":"laptop","label":"toy","coefficients":{"constant":0,"frame_rate":0,)"
            << R"("pixels_per_second":0,"video_bitrate":0.001,"online_bitrate":0,)"
            << R"("online_offset":0,"codec":0}})" << "\n";
    }
    SessionDataset dataset;
    const double bitrates[] = {10000.0, 12000.0, 20000.0};
    const double moses[] = {3.0, 4.0, 5.0};
    for (int i = 0; i < 3; ++i) {
        SessionRecord r;
        r.session_id = "toy" + std::to_string(i);
        r.device = DeviceKind::Laptop;
        r.codec = Codec::Vp9;
        r.width = 1920;
        r.height = 1080;
        r.frame_rate = 30.0;
        r.video_bitrate_kbps = bitrates[i];
        r.audio_bitrate_kbps = 0.0;
        r.duration_s = 100.0;
        r.mos = moses[i];
        dataset.records.push_back(r);
    }
    write_dataset_file(dataset, dir.path / "toy.csv");
    REQUIRE(run_cli("analyze --sessions toy.csv --profiles toy_profile.json --qoe provided "
                    "--out-dir out",
                    dir.path) == 0);
    const auto rows = read_csv(dir.path / "out" / "frontier_laptop_vp9.csv");
    REQUIRE(rows.size() == 4);  // header + 3 vertices
    CHECK(csv::parse_double(rows[1][0]) == 3.0);
    CHECK(csv::parse_double(rows[1][1]) == 10.0);
    CHECK(csv::parse_double(rows[2][1]) == 12.0);
    CHECK(csv::parse_double(rows[3][1]) == 20.0);
    // every toy session is a frontier member: zero savings all around
    const auto session_rows = read_csv(dir.path / "out" / "savings_sessions.csv");
    REQUIRE(session_rows.size() == 4);
    for (std::size_t i = 1; i < session_rows.size(); ++i) {
        CHECK(csv::parse_double(session_rows[i][4]) == 0.0);
    }
}
