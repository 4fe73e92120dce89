#include "streampower/sessions.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

#include <nlohmann/json.hpp>

#include "streampower/csvio.hpp"
#include "streampower/errors.hpp"

namespace streampower {

namespace {

using ordered_json = nlohmann::ordered_json;

// Canonical on-disk column order. `mos` is the only optional column.
constexpr std::array<std::string_view, 13> kColumns{
    "session_id",   "device",          "codec",        "width",
    "height",       "frame_rate",      "video_bitrate_kbps", "audio_bitrate_kbps",
    "duration_s",   "initial_delay_s", "stalling_events",    "stalling_total_s",
    "mos"};

DatasetFormat format_for_path(const std::filesystem::path& path,
                              std::optional<DatasetFormat> format) {
    if (format) return *format;
    const auto ext = path.extension().string();
    if (ext == ".jsonl" || ext == ".ndjson") return DatasetFormat::Jsonl;
    return DatasetFormat::Csv;
}

// Thrown internally for rows whose codec is valid text but outside the model.
struct UnsupportedCodec {
    std::string reason;
};

SessionRecord record_from_fields(const csv::Header& header,
                                 const std::vector<std::string>& fields) {
    auto field = [&](std::string_view name) -> const std::string& {
        return fields[header.index_of(name)];
    };

    SessionRecord record;
    record.session_id = field("session_id");
    const std::string& device_text = field("device");
    const auto device = try_parse_device_kind(device_text);
    if (!device) throw ValidationError("unknown device kind: '" + device_text + "'");
    record.device = *device;

    const std::string& codec_text = field("codec");
    const auto codec = try_parse_codec(codec_text);
    if (!codec) throw UnsupportedCodec{"unsupported codec: '" + codec_text + "'"};
    record.codec = *codec;

    record.width = static_cast<int>(csv::parse_integer(field("width")));
    record.height = static_cast<int>(csv::parse_integer(field("height")));
    record.frame_rate = csv::parse_double(field("frame_rate"));
    record.video_bitrate_kbps = csv::parse_double(field("video_bitrate_kbps"));
    record.audio_bitrate_kbps = csv::parse_double(field("audio_bitrate_kbps"));
    record.duration_s = csv::parse_double(field("duration_s"));
    record.initial_delay_s = csv::parse_double(field("initial_delay_s"));
    record.stalling_events = static_cast<int>(csv::parse_integer(field("stalling_events")));
    record.stalling_total_s = csv::parse_double(field("stalling_total_s"));
    if (const auto mos_index = header.find("mos")) {
        const std::string& mos_text = fields[*mos_index];
        if (!mos_text.empty()) record.mos = csv::parse_double(mos_text);
    }
    return record;
}

SessionRecord record_from_json(const nlohmann::json& row) {
    if (!row.is_object()) throw ValidationError("record is not a JSON object");
    auto require = [&](std::string_view name) -> const nlohmann::json& {
        const auto it = row.find(name);
        if (it == row.end()) throw ValidationError("missing field: " + std::string(name));
        return *it;
    };
    auto number = [&](std::string_view name) {
        const nlohmann::json& value = require(name);
        if (!value.is_number()) throw ValidationError("field '" + std::string(name) + "' is not a number");
        return value.get<double>();
    };

    SessionRecord record;
    const nlohmann::json& id = require("session_id");
    if (!id.is_string()) throw ValidationError("field 'session_id' is not a string");
    record.session_id = id.get<std::string>();

    const nlohmann::json& device = require("device");
    if (!device.is_string()) throw ValidationError("field 'device' is not a string");
    const auto kind = try_parse_device_kind(device.get<std::string>());
    if (!kind) throw ValidationError("unknown device kind: '" + device.get<std::string>() + "'");
    record.device = *kind;

    const nlohmann::json& codec = require("codec");
    if (!codec.is_string()) throw ValidationError("field 'codec' is not a string");
    const auto parsed = try_parse_codec(codec.get<std::string>());
    if (!parsed) throw UnsupportedCodec{"unsupported codec: '" + codec.get<std::string>() + "'"};
    record.codec = *parsed;

    record.width = static_cast<int>(number("width"));
    record.height = static_cast<int>(number("height"));
    record.frame_rate = number("frame_rate");
    record.video_bitrate_kbps = number("video_bitrate_kbps");
    record.audio_bitrate_kbps = number("audio_bitrate_kbps");
    record.duration_s = number("duration_s");
    record.initial_delay_s = number("initial_delay_s");
    record.stalling_events = static_cast<int>(number("stalling_events"));
    record.stalling_total_s = number("stalling_total_s");
    if (const auto it = row.find("mos"); it != row.end() && !it->is_null()) {
        if (!it->is_number()) throw ValidationError("field 'mos' is not a number");
        record.mos = it->get<double>();
    }
    return record;
}

}  // namespace

void SessionRecord::validate() const {
    auto bad = [&](const std::string& reason) { return ValidationError(reason); };
    for (const double value : {frame_rate, video_bitrate_kbps, audio_bitrate_kbps, duration_s,
                               initial_delay_s, stalling_total_s}) {
        if (!std::isfinite(value)) throw bad("non-finite numeric field");
    }
    if (width <= 0 || height <= 0) throw bad("width and height must be positive");
    if (frame_rate <= 0.0 || frame_rate > 240.0) throw bad("frame_rate must lie in (0, 240]");
    if (duration_s <= 0.0) throw bad("duration_s must be positive");
    if (video_bitrate_kbps < 0.0 || audio_bitrate_kbps < 0.0) throw bad("bitrates must be non-negative");
    if (initial_delay_s < 0.0) throw bad("initial_delay_s must be non-negative");
    if (stalling_events < 0) throw bad("stalling_events must be non-negative");
    if (stalling_total_s < 0.0) throw bad("stalling_total_s must be non-negative");
    if (mos) {
        if (!std::isfinite(*mos) || *mos < 1.0 || *mos > 5.0) throw bad("mos out of range");
    }
}

SessionDataset ingest(std::istream& in, DatasetFormat format, std::string source_label) {
    if (!in) throw IoError("cannot read session input");

    SessionDataset dataset;
    dataset.source_label = std::move(source_label);

    std::optional<csv::Header> header;
    std::size_t line_number = 0;
    if (format == DatasetFormat::Csv) {
        std::vector<std::string_view> required(kColumns.begin(), kColumns.end());
        required.pop_back();  // mos may be absent
        header = csv::read_header(in, required);
        line_number = 1;
    }

    std::string line;
    while (std::getline(in, line)) {
        ++line_number;
        if (line.empty() || line == "\r") continue;
        dataset.stats.total_rows += 1;
        try {
            SessionRecord record;
            if (format == DatasetFormat::Csv) {
                const auto fields = csv::split_row(line);
                if (fields.size() < header->columns.size()) {
                    throw ValidationError("expected " + std::to_string(header->columns.size()) +
                                          " fields, got " + std::to_string(fields.size()));
                }
                record = record_from_fields(*header, fields);
            } else {
                nlohmann::json row;
                try {
                    row = nlohmann::json::parse(line);
                } catch (const nlohmann::json::parse_error& e) {
                    throw ValidationError(std::string("invalid json: ") + e.what());
                }
                record = record_from_json(row);
            }
            record.validate();
            dataset.records.push_back(std::move(record));
            dataset.stats.accepted += 1;
        } catch (const UnsupportedCodec& skip) {
            dataset.stats.skipped += 1;
            dataset.stats.skips.push_back({line_number, skip.reason});
        } catch (const ValidationError& e) {
            dataset.stats.rejected += 1;
            dataset.stats.rejections.push_back({line_number, e.what()});
        }
    }
    return dataset;
}

SessionDataset ingest_file(const std::filesystem::path& path,
                           std::optional<DatasetFormat> format) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    return ingest(in, format_for_path(path, format), path.filename().string());
}

void write_dataset(const SessionDataset& dataset, std::ostream& out, DatasetFormat format) {
    if (format == DatasetFormat::Csv) {
        std::vector<std::string> fields(kColumns.begin(), kColumns.end());
        csv::write_row(out, fields);
        for (const SessionRecord& r : dataset.records) {
            fields.clear();
            fields.push_back(r.session_id);
            fields.emplace_back(to_string(r.device));
            fields.emplace_back(to_string(r.codec));
            fields.push_back(std::to_string(r.width));
            fields.push_back(std::to_string(r.height));
            fields.push_back(csv::format_double(r.frame_rate));
            fields.push_back(csv::format_double(r.video_bitrate_kbps));
            fields.push_back(csv::format_double(r.audio_bitrate_kbps));
            fields.push_back(csv::format_double(r.duration_s));
            fields.push_back(csv::format_double(r.initial_delay_s));
            fields.push_back(std::to_string(r.stalling_events));
            fields.push_back(csv::format_double(r.stalling_total_s));
            fields.push_back(r.mos ? csv::format_double(*r.mos) : std::string());
            csv::write_row(out, fields);
        }
        return;
    }
    for (const SessionRecord& r : dataset.records) {
        ordered_json row;
        row["session_id"] = r.session_id;
        row["device"] = to_string(r.device);
        row["codec"] = to_string(r.codec);
        row["width"] = r.width;
        row["height"] = r.height;
        row["frame_rate"] = r.frame_rate;
        row["video_bitrate_kbps"] = r.video_bitrate_kbps;
        row["audio_bitrate_kbps"] = r.audio_bitrate_kbps;
        row["duration_s"] = r.duration_s;
        row["initial_delay_s"] = r.initial_delay_s;
        row["stalling_events"] = r.stalling_events;
        row["stalling_total_s"] = r.stalling_total_s;
        if (r.mos) row["mos"] = *r.mos;
        out << row.dump() << '\n';
    }
}

void write_dataset_file(const SessionDataset& dataset, const std::filesystem::path& path,
                        std::optional<DatasetFormat> format) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    write_dataset(dataset, out, format_for_path(path, format));
    if (!out) throw IoError("failed while writing '" + path.string() + "'");
}

VariableVector to_variables(const SessionRecord& record, double overhead_factor) {
    record.validate();
    if (!(overhead_factor >= 1.0) || !std::isfinite(overhead_factor)) {
        throw ValidationError("overhead factor must be >= 1");
    }
    VariableVector v;
    v.constant = 1.0;
    v.frame_rate = record.frame_rate;
    v.pixels_per_second = static_cast<double>(record.width) *
                          static_cast<double>(record.height) * record.frame_rate;
    v.video_bitrate_kbps = record.video_bitrate_kbps;
    v.online_bitrate_kbps =
        (record.video_bitrate_kbps + record.audio_bitrate_kbps) * overhead_factor;
    // PCs are wired: their connection power sits in the constant offset.
    v.online_flag = record.device == DeviceKind::Laptop ? 1.0 : 0.0;
    v.codec = static_cast<double>(static_cast<int>(record.codec));
    v.validate();
    return v;
}

SessionRecord truncate_for_qoe(SessionRecord record, double limit_s) {
    if (!(limit_s > 0.0)) throw ValidationError("truncation limit must be positive");
    record.duration_s = std::min(record.duration_s, limit_s);
    return record;
}

double session_energy(const SessionRecord& record, const DeviceProfile& profile,
                      double overhead_factor, double limit_s) {
    const double power = predict_power(profile, to_variables(record, overhead_factor));
    return power * std::min(record.duration_s, limit_s);
}

}  // namespace streampower
