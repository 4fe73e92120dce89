// streampower: model and analyze the electrical power drawn by end-user
// devices during video streaming, and its tradeoff against perceived quality.

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "streampower/csvio.hpp"
#include "streampower/errors.hpp"
#include "streampower/manifest.hpp"
#include "streampower/pareto.hpp"
#include "streampower/power_model.hpp"
#include "streampower/profile_io.hpp"
#include "streampower/qoe.hpp"
#include "streampower/sessions.hpp"
#include "streampower/synth.hpp"
#include "streampower/trainer.hpp"

#include "svg.hpp"

namespace {

using namespace streampower;
using ordered_json = nlohmann::ordered_json;
namespace fs = std::filesystem;

constexpr std::string_view kSavingsNote =
    "Savings convention: delta_w is the absolute per-session power change in watts and "
    "delta_rel the relative change as a fraction of session power; negative values are "
    "potential savings. Mind the row labels when comparing against published tabulations: "
    "the watt and percent rows are sometimes printed swapped.";

using ProfileMap = std::map<DeviceKind, DeviceProfile>;

ProfileMap resolve_profiles(const std::string& selection) {
    if (selection == "builtin") return builtin_profiles();
    if (selection == "builtin:laptop" || selection == "builtin:pc") {
        const DeviceKind kind = parse_device_kind(selection.substr(8));
        ProfileMap map;
        map.emplace(kind, builtin_profiles().at(kind));
        return map;
    }
    ProfileMap map;
    for (DeviceProfile& profile : load_profiles(selection)) {
        const DeviceKind kind = profile.device;
        if (!map.emplace(kind, std::move(profile)).second) {
            throw SchemaError("'" + selection + "' holds more than one profile for device '" +
                              std::string(to_string(kind)) + "'");
        }
    }
    return map;
}

const DeviceProfile& profile_for(const ProfileMap& profiles, DeviceKind device) {
    const auto it = profiles.find(device);
    if (it == profiles.end()) {
        throw ValidationError("no profile loaded for device '" +
                              std::string(to_string(device)) + "'");
    }
    return it->second;
}

std::vector<std::string> labels_of(const ProfileMap& profiles) {
    std::vector<std::string> labels;
    for (const auto& [kind, profile] : profiles) labels.push_back(profile.label);
    return labels;
}

struct QoeFlags {
    std::string mode = "provided";
    StubEstimatorParams params;
};

void add_qoe_flags(CLI::App* cmd, QoeFlags& flags) {
    cmd->add_option("--qoe", flags.mode, "MOS source: provided|stub")
        ->check(CLI::IsMember({"provided", "stub"}))
        ->capture_default_str();
    cmd->add_option("--qoe-half-point", flags.params.bitrate_half_point_kbps,
                    "stub: bitrate at which the quality term reaches half scale (kbps)")
        ->capture_default_str();
    cmd->add_option("--qoe-resolution-exponent", flags.params.resolution_exponent,
                    "stub: exponent on the height/1080 ratio")
        ->capture_default_str();
    cmd->add_option("--qoe-stall-event-penalty", flags.params.stall_penalty_per_event,
                    "stub: MOS penalty per stalling event")
        ->capture_default_str();
    cmd->add_option("--qoe-stall-second-penalty", flags.params.stall_penalty_per_second,
                    "stub: MOS penalty per stalled second")
        ->capture_default_str();
    cmd->add_option("--qoe-delay-penalty", flags.params.initial_delay_penalty_per_second,
                    "stub: MOS penalty per second of initial delay")
        ->capture_default_str();
}

QoeSource make_source(const QoeFlags& flags) {
    if (flags.mode == "stub") return QoeSource::stub(flags.params);
    return QoeSource::provided();
}

ordered_json qoe_json(const QoeSource& source) {
    ordered_json j;
    j["mode"] = source.is_provided() ? "provided" : "stub";
    if (const StubEstimatorParams* p = source.stub_params()) {
        j["bitrate_half_point_kbps"] = p->bitrate_half_point_kbps;
        j["resolution_exponent"] = p->resolution_exponent;
        j["stall_penalty_per_event"] = p->stall_penalty_per_event;
        j["stall_penalty_per_second"] = p->stall_penalty_per_second;
        j["initial_delay_penalty_per_second"] = p->initial_delay_penalty_per_second;
    }
    return j;
}

RunManifest make_manifest(const std::string& command, std::vector<std::string> inputs,
                          const ordered_json& config, std::vector<std::string> profile_labels,
                          std::optional<std::uint64_t> seed) {
    RunManifest manifest;
    manifest.command = command;
    manifest.inputs = std::move(inputs);
    manifest.config_digest = hex64(fnv1a64(config.dump()));
    manifest.profile_labels = std::move(profile_labels);
    manifest.seed = seed;
    manifest.timestamp = current_timestamp_rfc3339();
    return manifest;
}

std::ofstream open_output(const fs::path& path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    return out;
}

void report_ingest(const SessionDataset& dataset) {
    std::cerr << "ingested " << dataset.stats.accepted << " sessions";
    if (dataset.stats.rejected > 0) std::cerr << ", rejected " << dataset.stats.rejected;
    if (dataset.stats.skipped > 0) std::cerr << ", skipped " << dataset.stats.skipped;
    std::cerr << " (" << dataset.source_label << ")\n";
    for (std::size_t i = 0; i < dataset.stats.rejections.size() && i < 5; ++i) {
        const RowIssue& issue = dataset.stats.rejections[i];
        std::cerr << "  line " << issue.line << ": " << issue.reason << "\n";
    }
}

ordered_json ingest_stats_json(const IngestStats& stats) {
    ordered_json j;
    j["total_rows"] = stats.total_rows;
    j["accepted"] = stats.accepted;
    j["rejected"] = stats.rejected;
    j["skipped"] = stats.skipped;
    return j;
}

struct EvaluatedSession {
    const SessionRecord* record = nullptr;
    double power_w = 0.0;
    double energy_j = 0.0;
    double mos = 0.0;
};

std::vector<EvaluatedSession> evaluate_sessions(const SessionDataset& dataset,
                                                const ProfileMap& profiles,
                                                const QoeSource& qoe, double overhead) {
    std::vector<EvaluatedSession> evaluated;
    evaluated.reserve(dataset.records.size());
    for (const SessionRecord& record : dataset.records) {
        const DeviceProfile& profile = profile_for(profiles, record.device);
        EvaluatedSession e;
        e.record = &record;
        e.mos = qoe.mos_for(record);
        e.power_w = predict_power(profile, to_variables(record, overhead));
        e.energy_j = e.power_w * std::min(record.duration_s, kQoeDurationLimitS);
        evaluated.push_back(e);
    }
    return evaluated;
}

std::vector<QPPoint> to_points(const std::vector<EvaluatedSession>& evaluated) {
    std::vector<QPPoint> points;
    points.reserve(evaluated.size());
    for (const EvaluatedSession& e : evaluated) {
        points.push_back({e.record->session_id, e.mos, e.power_w,
                          GroupKey{e.record->device, e.record->codec}});
    }
    return points;
}

// ---------------------------------------------------------------- synth ----

struct SynthCmd {
    SynthConfig config;
    std::string out;
    std::string format;
    std::string resolutions_file;
};

void load_resolution_classes(const std::string& path, std::vector<ResolutionClass>& out) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw SchemaError("'" + path + "' is not valid JSON: " + std::string(e.what()));
    }
    if (!doc.is_array()) throw SchemaError("resolution file must hold a JSON array");
    out.clear();
    try {
        for (const auto& entry : doc) {
            ResolutionClass r;
            r.width = entry.at("width").get<int>();
            r.height = entry.at("height").get<int>();
            r.weight = entry.at("weight").get<double>();
            r.bitrate_lo_kbps = entry.at("bitrate_lo_kbps").get<double>();
            r.bitrate_hi_kbps = entry.at("bitrate_hi_kbps").get<double>();
            out.push_back(r);
        }
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError("bad resolution class: " + std::string(e.what()));
    }
}

void run_synth(const SynthCmd& cmd) {
    SynthConfig config = cmd.config;
    if (!cmd.resolutions_file.empty()) {
        load_resolution_classes(cmd.resolutions_file, config.resolutions);
    }
    const SessionDataset dataset = generate_sessions(config);

    std::optional<DatasetFormat> format;
    if (cmd.format == "csv") format = DatasetFormat::Csv;
    if (cmd.format == "jsonl") format = DatasetFormat::Jsonl;
    write_dataset_file(dataset, cmd.out, format);

    ordered_json config_json;
    config_json["n_sessions"] = config.n_sessions;
    config_json["seed"] = config.seed;
    config_json["laptop_share"] = config.laptop_share;
    config_json["vp9_share"] = config.vp9_share;
    config_json["stall_share"] = config.stall_share;
    config_json["audio_bitrate_kbps"] = config.audio_bitrate_kbps;
    config_json["initial_delay_mean_s"] = config.initial_delay_mean_s;
    config_json["qoe"] = qoe_json(QoeSource::stub(config.qoe_stub));
    RunManifest manifest = make_manifest(
        "synth",
        cmd.resolutions_file.empty() ? std::vector<std::string>{}
                                     : std::vector<std::string>{cmd.resolutions_file},
        config_json, {}, config.seed);
    manifest.write_sidecar(cmd.out);

    std::cout << "wrote " << dataset.records.size() << " sessions to " << cmd.out << "\n";
}

// ------------------------------------------------------------------ fit ----

struct FitCmd {
    std::string measurements;
    std::string device;
    std::size_t folds = 10;
    std::uint64_t seed = 1;
    double ridge = 0.0;
    std::string out_profile;
    std::string out_report;
};

void run_fit(const FitCmd& cmd) {
    std::ifstream in(cmd.measurements);
    if (!in) throw IoError("cannot open '" + cmd.measurements + "'");
    const MeasurementSet data = read_measurements_csv(in, parse_device_kind(cmd.device));

    FitOptions options;
    options.ridge = cmd.ridge;
    const FitReport report = cross_validate(data, cmd.folds, cmd.seed, options);

    ordered_json config_json;
    config_json["device"] = cmd.device;
    config_json["folds"] = cmd.folds;
    config_json["seed"] = cmd.seed;
    config_json["ridge"] = cmd.ridge;
    const RunManifest manifest = make_manifest("fit", {cmd.measurements}, config_json,
                                               {report.profile.label}, cmd.seed);

    if (!cmd.out_profile.empty()) {
        write_profiles({&report.profile, 1}, cmd.out_profile, manifest);
    }
    if (!cmd.out_report.empty()) {
        ordered_json j;
        j["device"] = to_string(report.profile.device);
        j["label"] = report.profile.label;
        j["rows"] = data.rows.size();
        j["folds"] = report.folds;
        j["seed"] = report.seed;
        j["ridge"] = cmd.ridge;
        j["mean_relative_error"] = report.mean_relative_error;
        j["per_fold_errors"] = report.per_fold_errors;
        j["condition_diagnostic"] = report.condition_diagnostic;
        j["profile"] = profile_to_json(report.profile);
        j["manifest"] = manifest.to_json();
        auto out = open_output(cmd.out_report);
        out << j.dump(2) << '\n';
    }
    std::cout << "fit " << to_string(report.profile.device) << " on " << data.rows.size()
              << " rows: pooled CV error " << report.mean_relative_error * 100.0
              << "%, condition " << report.condition_diagnostic << "\n";
}

// -------------------------------------------------------------- predict ----

struct PredictCmd {
    std::string sessions;
    std::string profiles = "builtin";
    QoeFlags qoe;
    double overhead = 1.0;
    std::string out;
};

void run_predict(const PredictCmd& cmd) {
    const SessionDataset dataset = ingest_file(cmd.sessions);
    report_ingest(dataset);
    const ProfileMap profiles = resolve_profiles(cmd.profiles);
    const QoeSource qoe = make_source(cmd.qoe);

    std::vector<EvaluatedSession> evaluated =
        evaluate_sessions(dataset, profiles, qoe, cmd.overhead);
    std::stable_sort(evaluated.begin(), evaluated.end(),
                     [](const EvaluatedSession& a, const EvaluatedSession& b) {
                         return a.record->session_id < b.record->session_id;
                     });

    auto out = open_output(cmd.out);
    std::vector<std::string> fields{"session_id", "device", "codec",
                                    "power_w",    "energy_j", "mos"};
    csv::write_row(out, fields);
    for (const EvaluatedSession& e : evaluated) {
        fields.clear();
        fields.push_back(e.record->session_id);
        fields.emplace_back(to_string(e.record->device));
        fields.emplace_back(to_string(e.record->codec));
        fields.push_back(csv::format_double(e.power_w));
        fields.push_back(csv::format_double(e.energy_j));
        fields.push_back(csv::format_double(e.mos));
        csv::write_row(out, fields);
    }

    ordered_json config_json;
    config_json["profiles"] = cmd.profiles;
    config_json["overhead"] = cmd.overhead;
    config_json["qoe"] = qoe_json(qoe);
    RunManifest manifest =
        make_manifest("predict", {cmd.sessions}, config_json, labels_of(profiles), std::nullopt);
    manifest.write_sidecar(cmd.out);
    std::cout << "wrote " << evaluated.size() << " predictions to " << cmd.out << "\n";
}

// --------------------------------------------------------------- impact ----

struct ImpactCmd {
    std::string profile = "builtin";
    std::string out_table;
    std::string out_bands;
    std::string svg;
    std::vector<std::string> codecs{"h264", "vp9"};
    std::string resolutions = "854x480,1280x720,1920x1080";
    std::string frame_rates = "24,30,50,60";
    double bitrate_min = 500.0;
    double bitrate_max = 4000.0;
};

std::vector<Resolution> parse_resolutions(const std::string& text) {
    std::vector<Resolution> out;
    std::stringstream stream(text);
    std::string item;
    while (std::getline(stream, item, ',')) {
        const auto x = item.find('x');
        if (x == std::string::npos) {
            throw ValidationError("resolution must look like 1920x1080, got '" + item + "'");
        }
        Resolution r;
        r.width = static_cast<int>(csv::parse_integer(item.substr(0, x)));
        r.height = static_cast<int>(csv::parse_integer(item.substr(x + 1)));
        out.push_back(r);
    }
    return out;
}

std::vector<double> parse_double_list(const std::string& text) {
    std::vector<double> out;
    std::stringstream stream(text);
    std::string item;
    while (std::getline(stream, item, ',')) out.push_back(csv::parse_double(item));
    return out;
}

void write_band_svg(const fs::path& path, const std::vector<PowerBand>& bands) {
    if (bands.empty()) return;
    double fps_lo = bands[0].frame_rate, fps_hi = bands[0].frame_rate;
    double p_lo = bands[0].low_w, p_hi = bands[0].high_w;
    for (const PowerBand& b : bands) {
        fps_lo = std::min(fps_lo, b.frame_rate);
        fps_hi = std::max(fps_hi, b.frame_rate);
        p_lo = std::min(p_lo, b.low_w);
        p_hi = std::max(p_hi, b.high_w);
    }
    svgplot::Canvas canvas(640, 420);
    const svgplot::LinearScale x{fps_lo, fps_hi, 60, 600};
    const svgplot::LinearScale y{p_lo, p_hi, 380, 40};
    canvas.axes(60, 40, 600, 380, "frame rate (Hz)", "power (W)", fps_lo, fps_hi, p_lo, p_hi);

    std::map<std::pair<int, int>, std::vector<const PowerBand*>> by_resolution;
    for (const PowerBand& b : bands) {
        by_resolution[{b.resolution.width, b.resolution.height}].push_back(&b);
    }
    const std::vector<std::string> palette{"#1f77b4", "#ff7f0e", "#2ca02c",
                                           "#d62728", "#9467bd", "#8c564b"};
    std::size_t color = 0;
    for (auto& [resolution, group] : by_resolution) {
        std::sort(group.begin(), group.end(), [](const PowerBand* a, const PowerBand* b) {
            return a->frame_rate < b->frame_rate;
        });
        std::vector<std::pair<double, double>> outline;
        for (const PowerBand* b : group) outline.push_back({x(b->frame_rate), y(b->high_w)});
        for (auto it = group.rbegin(); it != group.rend(); ++it) {
            outline.push_back({x((*it)->frame_rate), y((*it)->low_w)});
        }
        canvas.polygon(outline, palette[color % palette.size()], 0.35);
        canvas.text(604, y(group.back()->high_w),
                    std::to_string(resolution.first) + "x" + std::to_string(resolution.second),
                    10);
        ++color;
    }
    auto out = open_output(path);
    out << canvas.str();
}

void run_impact(const ImpactCmd& cmd) {
    const ProfileMap profiles = resolve_profiles(cmd.profile);

    for (const auto& [kind, profile] : profiles) {
        const ImpactTable table = impact_table(profile);
        std::cout << "profile " << profile.label << " (" << to_string(kind) << ")\n";
        for (const ImpactEntry& entry : table.entries) {
            std::cout << "  " << entry.variable << ": ";
            if (!entry.applicable) {
                std::cout << "n/a\n";
                continue;
            }
            std::cout << "coefficient " << entry.coefficient << ", max " << entry.v_max
                      << ", impact " << entry.impact_w << " W\n";
        }
    }

    ordered_json config_json;
    config_json["profile"] = cmd.profile;
    config_json["resolutions"] = cmd.resolutions;
    config_json["frame_rates"] = cmd.frame_rates;
    config_json["bitrate_range"] = {cmd.bitrate_min, cmd.bitrate_max};
    RunManifest manifest =
        make_manifest("impact", {}, config_json, labels_of(profiles), std::nullopt);

    if (!cmd.out_table.empty()) {
        auto out = open_output(cmd.out_table);
        std::vector<std::string> header{"variable"};
        for (const auto& [kind, profile] : profiles) {
            const std::string prefix{to_string(kind)};
            header.push_back(prefix + "_coefficient");
            header.push_back(prefix + "_v_max");
            header.push_back(prefix + "_impact_w");
        }
        csv::write_row(out, header);
        for (std::size_t i = 0; i < kVariableCount; ++i) {
            std::vector<std::string> row{std::string(kVariableNames[i])};
            for (const auto& [kind, profile] : profiles) {
                const ImpactTable table = impact_table(profile);
                const ImpactEntry& entry = table.entries[i];
                if (!entry.applicable) {
                    row.insert(row.end(), {"n/a", "n/a", "n/a"});
                } else {
                    row.push_back(csv::format_double(entry.coefficient));
                    row.push_back(csv::format_double(entry.v_max));
                    row.push_back(csv::format_double(entry.impact_w));
                }
            }
            csv::write_row(out, row);
        }
        manifest.write_sidecar(cmd.out_table);
    }

    if (!cmd.out_bands.empty() || !cmd.svg.empty()) {
        const std::vector<Resolution> resolutions = parse_resolutions(cmd.resolutions);
        const std::vector<double> rates = parse_double_list(cmd.frame_rates);
        std::vector<PowerBand> all_bands;
        std::ofstream bands_out;
        if (!cmd.out_bands.empty()) {
            bands_out = open_output(cmd.out_bands);
            const std::vector<std::string> header{"device",     "codec", "width", "height",
                                                  "frame_rate", "low_w", "high_w"};
            csv::write_row(bands_out, header);
        }
        for (const auto& [kind, profile] : profiles) {
            for (const std::string& codec_name : cmd.codecs) {
                const Codec codec = parse_codec(codec_name);
                const auto bands = power_bands(profile, codec, resolutions, rates,
                                               {cmd.bitrate_min, cmd.bitrate_max});
                for (const PowerBand& b : bands) {
                    if (bands_out.is_open()) {
                        const std::vector<std::string> row{
                            std::string(to_string(kind)),
                            std::string(to_string(codec)),
                            std::to_string(b.resolution.width),
                            std::to_string(b.resolution.height),
                            csv::format_double(b.frame_rate),
                            csv::format_double(b.low_w),
                            csv::format_double(b.high_w)};
                        csv::write_row(bands_out, row);
                    }
                    all_bands.push_back(b);
                }
            }
        }
        if (!cmd.out_bands.empty()) manifest.write_sidecar(cmd.out_bands);
        if (!cmd.svg.empty()) write_band_svg(cmd.svg, all_bands);
    }
}

// -------------------------------------------------------------- analyze ----

struct AnalyzeCmd {
    std::string sessions;
    std::string profiles = "builtin";
    QoeFlags qoe;
    double overhead = 1.0;
    double trim = 0.005;
    std::size_t mos_bins = 60;
    std::size_t power_bins = 60;
    std::string out_dir = "analysis";
    bool svg = false;
};

struct GroupAnalysis {
    GroupKey key;
    std::size_t sessions = 0;
    double mean_power_w = 0.0;
    double share_mos_ge_4 = 0.0;
    bool frontier_available = false;
    HullFrontier frontier;
    GroupSavings savings;
    DensityGrid density;
};

std::vector<GroupAnalysis> analyze_groups(const std::vector<QPPoint>& points, double trim,
                                          std::size_t mos_bins, std::size_t power_bins) {
    std::vector<GroupAnalysis> results;
    for (const auto& [key, members] : group_points(points)) {
        GroupAnalysis g;
        g.key = key;
        g.sessions = members.size();
        double power_sum = 0.0;
        std::size_t good = 0;
        for (const QPPoint& p : members) {
            power_sum += p.power_w;
            if (p.mos >= 4.0) ++good;
        }
        g.mean_power_w = power_sum / static_cast<double>(members.size());
        g.share_mos_ge_4 = static_cast<double>(good) / static_cast<double>(members.size());
        g.density = density_grid(members, mos_bins, power_bins);
        try {
            g.frontier = build_frontier(members, trim);
            g.savings = savings(members, g.frontier);
            g.frontier_available = true;
        } catch (const ValidationError&) {
            g.frontier_available = false;  // too few points: marked, not fatal
        }
        results.push_back(std::move(g));
    }
    return results;
}

void write_frontier_csv(const fs::path& path, const HullFrontier& frontier) {
    auto out = open_output(path);
    std::vector<std::string> fields{"mos", "power_w"};
    csv::write_row(out, fields);
    for (const FrontierVertex& v : frontier.vertices) {
        fields.clear();
        fields.push_back(csv::format_double(v.mos));
        fields.push_back(csv::format_double(v.power_w));
        csv::write_row(out, fields);
    }
}

void write_density_csv(const fs::path& path, const DensityGrid& grid) {
    auto out = open_output(path);
    std::vector<std::string> meta{"mos_lo",   "mos_hi",    "power_lo",
                                  "power_hi", "mos_bins",  "power_bins"};
    csv::write_row(out, meta);
    meta = {csv::format_double(grid.mos_lo),   csv::format_double(grid.mos_hi),
            csv::format_double(grid.power_lo), csv::format_double(grid.power_hi),
            std::to_string(grid.mos_bins),     std::to_string(grid.power_bins)};
    csv::write_row(out, meta);
    // one row per power bin, ascending; one column per MOS bin
    for (std::size_t w = 0; w < grid.power_bins; ++w) {
        std::vector<std::string> row;
        row.reserve(grid.mos_bins);
        for (std::size_t m = 0; m < grid.mos_bins; ++m) {
            row.push_back(std::to_string(grid.at(w, m)));
        }
        csv::write_row(out, row);
    }
}

void write_scatter_svg(const fs::path& path, const std::vector<QPPoint>& members,
                       const GroupAnalysis& group) {
    svgplot::Canvas canvas(640, 420);
    double mos_lo = 5.0, mos_hi = 1.0, p_lo = 1e300, p_hi = 0.0;
    for (const QPPoint& p : members) {
        mos_lo = std::min(mos_lo, p.mos);
        mos_hi = std::max(mos_hi, p.mos);
        p_lo = std::min(p_lo, p.power_w);
        p_hi = std::max(p_hi, p.power_w);
    }
    const svgplot::LinearScale x{mos_lo, mos_hi, 60, 600};
    const svgplot::LinearScale y{p_lo, p_hi, 380, 40};
    canvas.axes(60, 40, 600, 380, "MOS", "power (W)", mos_lo, mos_hi, p_lo, p_hi);

    const std::size_t stride = std::max<std::size_t>(1, members.size() / 2000);
    for (std::size_t i = 0; i < members.size(); i += stride) {
        canvas.circle(x(members[i].mos), y(members[i].power_w), 1.5, "#1f77b4", 0.35);
    }
    if (mos_lo <= 4.0 && 4.0 <= mos_hi) {
        canvas.line(x(4.0), 40, x(4.0), 380, "#999", 1.0);
        canvas.text(x(4.0) + 3, 52, "MOS 4", 10);
    }
    if (group.frontier_available) {
        std::vector<std::pair<double, double>> chain;
        for (const FrontierVertex& v : group.frontier.vertices) {
            chain.push_back({x(v.mos), y(v.power_w)});
        }
        canvas.polyline(chain, "#000", 2.0);
    }
    canvas.text(320, 24, to_string(group.key), 13, "middle");
    auto out = open_output(path);
    out << canvas.str();
}

std::string group_file_tag(const GroupKey& key) {
    return std::string(to_string(key.device)) + "_" + std::string(to_string(key.codec));
}

void run_analyze(const AnalyzeCmd& cmd) {
    const SessionDataset dataset = ingest_file(cmd.sessions);
    report_ingest(dataset);
    const ProfileMap profiles = resolve_profiles(cmd.profiles);
    const QoeSource qoe = make_source(cmd.qoe);

    const std::vector<EvaluatedSession> evaluated =
        evaluate_sessions(dataset, profiles, qoe, cmd.overhead);
    const std::vector<QPPoint> points = to_points(evaluated);
    const auto grouped = group_points(points);
    const std::vector<GroupAnalysis> groups =
        analyze_groups(points, cmd.trim, cmd.mos_bins, cmd.power_bins);

    ordered_json config_json;
    config_json["profiles"] = cmd.profiles;
    config_json["overhead"] = cmd.overhead;
    config_json["trim"] = cmd.trim;
    config_json["qoe"] = qoe_json(qoe);
    RunManifest manifest =
        make_manifest("analyze", {cmd.sessions}, config_json, labels_of(profiles), std::nullopt);

    const fs::path dir(cmd.out_dir);
    fs::create_directories(dir);

    ordered_json report;
    report["qoe_source"] = qoe_json(qoe);
    report["overhead"] = cmd.overhead;
    report["trim_quantile"] = cmd.trim;
    report["ingest_stats"] = ingest_stats_json(dataset.stats);
    report["groups"] = ordered_json::array();
    for (const GroupAnalysis& g : groups) {
        ordered_json gj;
        gj["device"] = to_string(g.key.device);
        gj["codec"] = to_string(g.key.codec);
        gj["sessions"] = g.sessions;
        gj["mean_power_w"] = g.mean_power_w;
        gj["share_mos_ge_4"] = g.share_mos_ge_4;
        gj["frontier_available"] = g.frontier_available;
        if (g.frontier_available) {
            gj["considered"] = g.savings.considered;
            gj["excluded_outliers"] = g.savings.excluded_outliers;
            gj["mean_delta_w"] = g.savings.mean_delta_w;
            gj["mean_delta_rel"] = g.savings.mean_delta_rel;
            ordered_json vertices = ordered_json::array();
            for (const FrontierVertex& v : g.frontier.vertices) {
                vertices.push_back({{"mos", v.mos}, {"power_w", v.power_w}});
            }
            gj["frontier_vertices"] = vertices;
        }
        report["groups"].push_back(gj);
    }
    report["notes"] = ordered_json::array({std::string(kSavingsNote)});
    report["manifest"] = manifest.to_json();
    {
        auto out = open_output(dir / "savings.json");
        out << report.dump(2) << '\n';
    }

    {
        auto out = open_output(dir / "savings_table.csv");
        std::vector<std::string> header{"metric"};
        for (const GroupAnalysis& g : groups) header.push_back(to_string(g.key));
        csv::write_row(out, header);
        auto emit_row = [&](const std::string& name, auto getter) {
            std::vector<std::string> row{name};
            for (const GroupAnalysis& g : groups) {
                row.push_back(g.frontier_available ? getter(g) : std::string("unavailable"));
            }
            csv::write_row(out, row);
        };
        emit_row("sessions", [](const GroupAnalysis& g) { return std::to_string(g.sessions); });
        emit_row("mean_delta_w", [](const GroupAnalysis& g) {
            return csv::format_double(g.savings.mean_delta_w);
        });
        emit_row("mean_delta_rel_pct", [](const GroupAnalysis& g) {
            return csv::format_double(g.savings.mean_delta_rel * 100.0);
        });
        out << "# " << kSavingsNote << "\n";
    }

    {
        auto out = open_output(dir / "savings_sessions.csv");
        std::vector<std::string> fields{"session_id", "group",   "mos", "power_w",
                                        "delta_w",    "delta_rel"};
        csv::write_row(out, fields);
        for (const GroupAnalysis& g : groups) {
            if (!g.frontier_available) continue;
            const auto& members = grouped.at(g.key);
            std::size_t cursor = 0;
            for (const QPPoint& p : members) {
                if (is_outlier(p, g.frontier.bounds)) continue;
                const SessionSavings& s = g.savings.sessions[cursor++];
                fields.clear();
                fields.push_back(s.session_id);
                fields.push_back(to_string(g.key));
                fields.push_back(csv::format_double(p.mos));
                fields.push_back(csv::format_double(p.power_w));
                fields.push_back(csv::format_double(s.delta_w));
                fields.push_back(csv::format_double(s.delta_rel));
                csv::write_row(out, fields);
            }
        }
    }

    for (const GroupAnalysis& g : groups) {
        const std::string tag = group_file_tag(g.key);
        if (g.frontier_available) {
            write_frontier_csv(dir / ("frontier_" + tag + ".csv"), g.frontier);
        }
        write_density_csv(dir / ("density_" + tag + ".csv"), g.density);
        if (cmd.svg) {
            write_scatter_svg(dir / ("scatter_" + tag + ".svg"), grouped.at(g.key), g);
        }
    }
    manifest.write_sidecar(dir / "savings.json");

    for (const GroupAnalysis& g : groups) {
        std::cout << to_string(g.key) << ": " << g.sessions << " sessions, mean power "
                  << g.mean_power_w << " W";
        if (g.frontier_available) {
            std::cout << ", mean savings " << g.savings.mean_delta_rel * 100.0 << "% ("
                      << g.savings.mean_delta_w << " W)";
        } else {
            std::cout << ", frontier unavailable";
        }
        std::cout << "\n";
    }
}

// ------------------------------------------------------------- scenario ----

struct ScenarioCmd {
    std::string sessions;
    std::string profiles = "builtin";
    QoeFlags qoe;
    double overhead = 1.0;
    double trim = 0.005;
    std::vector<std::string> mappings;
    std::string out;
};

void run_scenario(const ScenarioCmd& cmd) {
    if (cmd.mappings.empty()) {
        throw ValidationError("at least one --map '<device>:<codec>-><device>:<codec>' required");
    }
    GroupMapping mapping;
    for (const std::string& text : cmd.mappings) {
        const auto arrow = text.find("->");
        if (arrow == std::string::npos) {
            throw ValidationError("mapping must look like 'laptop:vp9->laptop:h264', got '" +
                                  text + "'");
        }
        const GroupKey source = parse_group_key(text.substr(0, arrow));
        const GroupKey target = parse_group_key(text.substr(arrow + 2));
        if (!mapping.emplace(source, target).second) {
            throw ValidationError("duplicate mapping for source group " + to_string(source));
        }
    }

    const SessionDataset dataset = ingest_file(cmd.sessions);
    report_ingest(dataset);
    const ProfileMap profiles = resolve_profiles(cmd.profiles);
    const QoeSource qoe = make_source(cmd.qoe);
    const std::vector<QPPoint> points =
        to_points(evaluate_sessions(dataset, profiles, qoe, cmd.overhead));

    std::map<GroupKey, HullFrontier> frontiers;
    const auto grouped = group_points(points);
    for (const auto& [source, target] : mapping) {
        for (const GroupKey& key : {source, target}) {
            if (frontiers.contains(key)) continue;
            const auto members = grouped.find(key);
            if (members == grouped.end()) {
                throw ValidationError("no sessions in group " + to_string(key));
            }
            frontiers.emplace(key, build_frontier(members->second, cmd.trim));
        }
    }

    const std::vector<ScenarioResult> results = scenario_switch(points, frontiers, mapping);

    ordered_json config_json;
    config_json["profiles"] = cmd.profiles;
    config_json["overhead"] = cmd.overhead;
    config_json["trim"] = cmd.trim;
    config_json["qoe"] = qoe_json(qoe);
    config_json["mappings"] = cmd.mappings;
    const RunManifest manifest = make_manifest("scenario", {cmd.sessions}, config_json,
                                               labels_of(profiles), std::nullopt);

    ordered_json j;
    j["qoe_source"] = qoe_json(qoe);
    j["trim_quantile"] = cmd.trim;
    j["scenarios"] = ordered_json::array();
    for (const ScenarioResult& r : results) {
        ordered_json rj;
        rj["source"] = to_string(r.source);
        rj["target"] = to_string(r.target);
        rj["considered"] = r.considered;
        rj["excluded_outliers"] = r.excluded_outliers;
        rj["mean_delta_w"] = r.mean_delta_w;
        rj["mean_delta_rel"] = r.mean_delta_rel;
        j["scenarios"].push_back(rj);
    }
    j["notes"] = ordered_json::array({std::string(kSavingsNote)});
    j["manifest"] = manifest.to_json();
    auto out = open_output(cmd.out);
    out << j.dump(2) << '\n';

    for (const ScenarioResult& r : results) {
        std::cout << to_string(r.source) << " -> " << to_string(r.target) << ": mean savings "
                  << r.mean_delta_rel * 100.0 << "% (" << r.mean_delta_w << " W) over "
                  << r.considered << " sessions\n";
    }
}

// ------------------------------------------------------------- profiles ----

void run_export_profiles(const std::string& out_path) {
    std::vector<DeviceProfile> bundle;
    for (const auto& [kind, profile] : builtin_profiles()) bundle.push_back(profile);
    const RunManifest manifest = make_manifest(
        "profiles", {}, ordered_json::object(), labels_of(builtin_profiles()), std::nullopt);
    write_profiles(bundle, out_path, manifest);
    std::cout << "wrote " << bundle.size() << " profiles to " << out_path << "\n";
}

int exit_code_for(const Error& error) {
    if (dynamic_cast<const SingularityError*>(&error)) return 3;
    if (dynamic_cast<const IoError*>(&error)) return 4;
    if (dynamic_cast<const SchemaError*>(&error)) return 5;
    if (dynamic_cast<const ConfigError*>(&error)) return 5;
    return 2;  // validation, structural, insufficient data, missing MOS
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"power and QoE analytics for video streaming sessions"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string("streampower ") + std::string(kToolVersion) +
                                          " (profiles " + std::string(kProfileBundleVersion) +
                                          ")");
    app.set_config("--config");

    SynthCmd synth_cmd;
    auto* synth = app.add_subcommand("synth", "generate a synthetic session dataset");
    synth->add_option("--n", synth_cmd.config.n_sessions, "number of sessions")
        ->capture_default_str();
    synth->add_option("--seed", synth_cmd.config.seed, "master RNG seed")->capture_default_str();
    synth->add_option("--out", synth_cmd.out, "output dataset path")->required();
    synth->add_option("--format", synth_cmd.format, "csv|jsonl (default: by extension)")
        ->check(CLI::IsMember({"csv", "jsonl"}));
    synth->add_option("--laptop-share", synth_cmd.config.laptop_share, "share of laptop sessions")
        ->capture_default_str();
    synth->add_option("--vp9-share", synth_cmd.config.vp9_share, "share of VP9 sessions")
        ->capture_default_str();
    synth->add_option("--stall-share", synth_cmd.config.stall_share,
                      "share of sessions with one sub-second stall")
        ->capture_default_str();
    synth->add_option("--audio-kbps", synth_cmd.config.audio_bitrate_kbps, "audio bitrate")
        ->capture_default_str();
    synth->add_option("--delay-mean", synth_cmd.config.initial_delay_mean_s,
                      "mean initial delay (s)")
        ->capture_default_str();
    synth->add_option("--resolutions-file", synth_cmd.resolutions_file,
                      "JSON array of resolution classes");
    synth->callback([&] { run_synth(synth_cmd); });

    FitCmd fit_cmd;
    auto* fit_sub = app.add_subcommand("fit", "fit a device profile from measurements");
    fit_sub->add_option("--measurements", fit_cmd.measurements, "measurement CSV")->required();
    fit_sub->add_option("--device", fit_cmd.device, "laptop|pc")->required();
    fit_sub->add_option("--folds", fit_cmd.folds, "cross-validation folds")
        ->capture_default_str();
    fit_sub->add_option("--seed", fit_cmd.seed, "fold shuffle seed")->capture_default_str();
    fit_sub->add_option("--ridge", fit_cmd.ridge, "optional ridge term")->capture_default_str();
    fit_sub->add_option("--out-profile", fit_cmd.out_profile, "profile bundle output");
    fit_sub->add_option("--out-report", fit_cmd.out_report, "fit report JSON output");
    fit_sub->callback([&] { run_fit(fit_cmd); });

    PredictCmd predict_cmd;
    auto* predict = app.add_subcommand("predict", "per-session power, energy and MOS");
    predict->add_option("--sessions", predict_cmd.sessions, "session dataset (csv/jsonl)")
        ->required();
    predict->add_option("--profiles", predict_cmd.profiles,
                        "builtin | builtin:laptop | builtin:pc | profile file")
        ->capture_default_str();
    predict->add_option("--overhead", predict_cmd.overhead,
                        "side-information factor on the online bitrate")
        ->capture_default_str();
    predict->add_option("--out", predict_cmd.out, "output CSV")->required();
    add_qoe_flags(predict, predict_cmd.qoe);
    predict->callback([&] { run_predict(predict_cmd); });

    ImpactCmd impact_cmd;
    auto* impact = app.add_subcommand("impact", "per-variable impact table and power bands");
    impact->add_option("--profile", impact_cmd.profile, "profile selection")
        ->capture_default_str();
    impact->add_option("--out-table", impact_cmd.out_table, "impact table CSV");
    impact->add_option("--out-bands", impact_cmd.out_bands, "band dataset CSV");
    impact->add_option("--svg", impact_cmd.svg, "band chart SVG");
    impact->add_option("--codecs", impact_cmd.codecs, "codecs to sweep")->capture_default_str();
    impact->add_option("--resolutions", impact_cmd.resolutions, "comma-separated WxH list")
        ->capture_default_str();
    impact->add_option("--fps", impact_cmd.frame_rates, "comma-separated frame rates")
        ->capture_default_str();
    impact->add_option("--bitrate-min", impact_cmd.bitrate_min, "band lower bitrate (kbps)")
        ->capture_default_str();
    impact->add_option("--bitrate-max", impact_cmd.bitrate_max, "band upper bitrate (kbps)")
        ->capture_default_str();
    impact->callback([&] { run_impact(impact_cmd); });

    AnalyzeCmd analyze_cmd;
    auto* analyze = app.add_subcommand("analyze", "convex-hull savings analysis per group");
    analyze->add_option("--sessions", analyze_cmd.sessions, "session dataset")->required();
    analyze->add_option("--profiles", analyze_cmd.profiles, "profile selection")
        ->capture_default_str();
    analyze->add_option("--overhead", analyze_cmd.overhead, "online bitrate factor")
        ->capture_default_str();
    analyze->add_option("--trim", analyze_cmd.trim, "outlier trim quantile")
        ->capture_default_str();
    analyze->add_option("--mos-bins", analyze_cmd.mos_bins, "density grid MOS bins")
        ->capture_default_str();
    analyze->add_option("--power-bins", analyze_cmd.power_bins, "density grid power bins")
        ->capture_default_str();
    analyze->add_option("--out-dir", analyze_cmd.out_dir, "output directory")
        ->capture_default_str();
    analyze->add_flag("--svg", analyze_cmd.svg, "emit scatter/hull SVG per group");
    add_qoe_flags(analyze, analyze_cmd.qoe);
    analyze->callback([&] { run_analyze(analyze_cmd); });

    ScenarioCmd scenario_cmd;
    auto* scenario = app.add_subcommand("scenario", "savings when switching device/codec groups");
    scenario->add_option("--sessions", scenario_cmd.sessions, "session dataset")->required();
    scenario->add_option("--profiles", scenario_cmd.profiles, "profile selection")
        ->capture_default_str();
    scenario->add_option("--overhead", scenario_cmd.overhead, "online bitrate factor")
        ->capture_default_str();
    scenario->add_option("--trim", scenario_cmd.trim, "outlier trim quantile")
        ->capture_default_str();
    scenario->add_option("--map", scenario_cmd.mappings,
                         "group mapping, e.g. laptop:vp9->laptop:h264 (repeatable)");
    scenario->add_option("--out", scenario_cmd.out, "scenario report JSON")->required();
    add_qoe_flags(scenario, scenario_cmd.qoe);
    scenario->callback([&] { run_scenario(scenario_cmd); });

    std::string profiles_out;
    auto* profiles_sub = app.add_subcommand("profiles", "export the bundled device profiles");
    profiles_sub->add_option("--out", profiles_out, "bundle output path")->required();
    profiles_sub->callback([&] { run_export_profiles(profiles_out); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code_for(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
