#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "streampower/power_model.hpp"

namespace streampower {

inline constexpr double kQoeDurationLimitS = 300.0;

// One streaming playback as recorded in a session dataset.
struct SessionRecord {
    std::string session_id;
    DeviceKind device = DeviceKind::Laptop;
    Codec codec = Codec::H264;
    int width = 0;
    int height = 0;
    double frame_rate = 0.0;          // Hz
    double video_bitrate_kbps = 0.0;
    double audio_bitrate_kbps = 0.0;
    double duration_s = 0.0;          // playback duration
    double initial_delay_s = 0.0;
    int stalling_events = 0;
    double stalling_total_s = 0.0;
    std::optional<double> mos;        // [1,5] when present

    void validate() const;  // throws ValidationError
};

struct RowIssue {
    std::size_t line = 0;  // 1-based input line (or record index for streams)
    std::string reason;
};

struct IngestStats {
    std::size_t total_rows = 0;
    std::size_t accepted = 0;
    std::size_t rejected = 0;
    std::size_t skipped = 0;
    std::vector<RowIssue> rejections;
    std::vector<RowIssue> skips;
};

// Immutable after ingest; per-record mapping downstream is pure.
struct SessionDataset {
    std::vector<SessionRecord> records;
    std::string source_label;
    IngestStats stats;
};

enum class DatasetFormat { Csv, Jsonl };

// Malformed rows are counted with line numbers and reasons, never dropped
// silently; rows with codecs outside {H.264, VP9} are skipped.
SessionDataset ingest(std::istream& in, DatasetFormat format, std::string source_label = {});
SessionDataset ingest_file(const std::filesystem::path& path,
                           std::optional<DatasetFormat> format = std::nullopt);

void write_dataset(const SessionDataset& dataset, std::ostream& out, DatasetFormat format);
void write_dataset_file(const SessionDataset& dataset, const std::filesystem::path& path,
                        std::optional<DatasetFormat> format = std::nullopt);

// Maps a session onto the power-model variables. The online bitrate is
// (video + audio) scaled by the side-information overhead factor.
VariableVector to_variables(const SessionRecord& record, double overhead_factor = 1.0);

// Clamps the playback duration to the QoE model's validity window.
SessionRecord truncate_for_qoe(SessionRecord record, double limit_s = kQoeDurationLimitS);

// Predicted mean power times the truncated duration, in joules.
double session_energy(const SessionRecord& record, const DeviceProfile& profile,
                      double overhead_factor = 1.0, double limit_s = kQoeDurationLimitS);

}  // namespace streampower
