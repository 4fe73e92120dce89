#include "streampower/trainer.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <string>

#include "streampower/csvio.hpp"
#include "streampower/errors.hpp"
#include "streampower/random.hpp"

namespace streampower {

namespace {

// Effective design columns: the online-offset column is structurally zero for
// desktop PCs and would make every PC design singular.
std::vector<std::size_t> effective_columns(DeviceKind device) {
    std::vector<std::size_t> columns;
    for (std::size_t i = 0; i < kVariableCount; ++i) {
        if (device == DeviceKind::DesktopPC && kVariableNames[i] == "online_flag") continue;
        columns.push_back(i);
    }
    return columns;
}

struct SolveResult {
    std::vector<double> coefficients;  // expanded to kVariableCount
    double condition_diagnostic = 0.0;
};

SolveResult solve_least_squares(const MeasurementSet& data, const FitOptions& options) {
    const auto columns = effective_columns(data.device);
    const auto rows = static_cast<Eigen::Index>(data.rows.size());
    const auto cols = static_cast<Eigen::Index>(columns.size());

    if (data.rows.size() < columns.size()) {
        throw InsufficientDataError(
            "need at least " + std::to_string(columns.size()) + " measurements, got " +
            std::to_string(data.rows.size()));
    }

    Eigen::MatrixXd design(rows, cols);
    Eigen::VectorXd power(rows);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const auto vars = data.rows[static_cast<std::size_t>(r)].variables.as_array();
        for (Eigen::Index c = 0; c < cols; ++c) {
            design(r, c) = vars[columns[static_cast<std::size_t>(c)]];
        }
        power(r) = data.rows[static_cast<std::size_t>(r)].measured_power_w;
    }

    // Equilibrate columns so the rank test sees correlation structure rather
    // than unit disparities (pixel rates are ~1e8, coefficients ~1e-9).
    Eigen::VectorXd norms(cols);
    for (Eigen::Index c = 0; c < cols; ++c) {
        norms(c) = design.col(c).norm();
        if (norms(c) == 0.0) {
            throw SingularityError(
                "design matrix column '" +
                    std::string(kVariableNames[columns[static_cast<std::size_t>(c)]]) +
                    "' is identically zero",
                {std::string(kVariableNames[columns[static_cast<std::size_t>(c)]])});
        }
        design.col(c) /= norms(c);
    }

    Eigen::MatrixXd system = design;
    Eigen::VectorXd rhs = power;
    if (options.ridge > 0.0) {
        system.conservativeResize(rows + cols, Eigen::NoChange);
        system.bottomRows(cols) =
            std::sqrt(options.ridge) * Eigen::MatrixXd::Identity(cols, cols);
        rhs.conservativeResize(rows + cols);
        rhs.tail(cols).setZero();
    }

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(system);
    const Eigen::MatrixXd r_factor =
        qr.matrixR().topLeftCorner(cols, cols).triangularView<Eigen::Upper>();
    const double leading = std::abs(r_factor(0, 0));
    double smallest = leading;
    std::vector<std::string> collinear;
    for (Eigen::Index c = 0; c < cols; ++c) {
        const double diagonal = std::abs(r_factor(c, c));
        smallest = std::min(smallest, diagonal);
        if (diagonal < options.rank_tolerance * leading) {
            const auto original = columns[static_cast<std::size_t>(qr.colsPermutation().indices()(c))];
            collinear.emplace_back(kVariableNames[original]);
        }
    }
    if (!collinear.empty() && options.ridge <= 0.0) {
        std::string names;
        for (const auto& name : collinear) {
            if (!names.empty()) names += ", ";
            names += name;
        }
        throw SingularityError("design matrix is rank deficient; collinear column(s): " + names,
                               collinear);
    }

    const Eigen::VectorXd solution = qr.solve(rhs);

    SolveResult result;
    result.coefficients.assign(kVariableCount, 0.0);
    for (Eigen::Index c = 0; c < cols; ++c) {
        result.coefficients[columns[static_cast<std::size_t>(c)]] = solution(c) / norms(c);
    }
    result.condition_diagnostic = smallest > 0.0 ? leading / smallest
                                                 : std::numeric_limits<double>::infinity();
    return result;
}

MeasurementSet subset(const MeasurementSet& data, std::span<const std::size_t> indices) {
    MeasurementSet out;
    out.device = data.device;
    out.rows.reserve(indices.size());
    for (const std::size_t i : indices) out.rows.push_back(data.rows[i]);
    return out;
}

DeviceProfile profile_from_solution(const MeasurementSet& data, const SolveResult& solved) {
    DeviceProfile profile;
    profile.device = data.device;
    profile.coefficients = solved.coefficients;
    profile.online_offset_applicable = data.device == DeviceKind::Laptop;
    profile.v_max = default_v_max();
    profile.label = "fit-" + std::string(to_string(data.device)) + "-m" +
                    std::to_string(data.rows.size());
    return profile;
}

}  // namespace

void MeasurementSet::validate() const {
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const Measurement& m = rows[i];
        try {
            m.variables.validate();
        } catch (const ValidationError& e) {
            throw ValidationError("measurement row " + std::to_string(i) + ": " + e.what());
        }
        if (device == DeviceKind::DesktopPC && m.variables.online_flag != 0.0) {
            throw ValidationError("measurement row " + std::to_string(i) +
                                  ": desktop PC rows must have online_flag 0");
        }
        if (!(m.measured_power_w > 0.0) || !std::isfinite(m.measured_power_w)) {
            throw ValidationError("measurement row " + std::to_string(i) +
                                  ": measured power must be positive");
        }
    }
}

DeviceProfile fit(const MeasurementSet& data, const FitOptions& options) {
    data.validate();
    return profile_from_solution(data, solve_least_squares(data, options));
}

double relative_error(const DeviceProfile& profile, std::span<const Measurement> rows) {
    if (rows.empty()) return 0.0;
    long double sum = 0.0L;
    for (const Measurement& m : rows) {
        if (!(m.measured_power_w > 0.0)) {
            throw ValidationError("relative error undefined for non-positive measured power");
        }
        const double predicted = predict_power(profile, m.variables);
        sum += std::abs(predicted - m.measured_power_w) / m.measured_power_w;
    }
    return static_cast<double>(sum / static_cast<long double>(rows.size()));
}

FitReport cross_validate(const MeasurementSet& data, std::size_t folds, std::uint64_t seed,
                         const FitOptions& options) {
    data.validate();
    if (folds < 2) {
        throw ValidationError("cross-validation needs at least 2 folds");
    }
    const std::size_t total = data.rows.size();
    if (total < folds) {
        throw InsufficientDataError("need at least " + std::to_string(folds) +
                                    " rows for " + std::to_string(folds) + "-fold CV, got " +
                                    std::to_string(total));
    }

    std::vector<std::size_t> order(total);
    std::iota(order.begin(), order.end(), std::size_t{0});
    RandomStream rng(seed);
    rng.shuffle(std::span<std::size_t>(order));

    FitReport report;
    report.seed = seed;
    report.folds = folds;
    report.per_fold_errors.reserve(folds);

    long double pooled = 0.0L;
    std::size_t offset = 0;
    for (std::size_t fold = 0; fold < folds; ++fold) {
        const std::size_t size = total / folds + (fold < total % folds ? 1 : 0);
        const std::span<const std::size_t> held(order.data() + offset, size);
        std::vector<std::size_t> training;
        training.reserve(total - size);
        training.insert(training.end(), order.begin(), order.begin() + static_cast<std::ptrdiff_t>(offset));
        training.insert(training.end(), order.begin() + static_cast<std::ptrdiff_t>(offset + size), order.end());
        offset += size;

        DeviceProfile fold_profile;
        try {
            fold_profile = fit(subset(data, training), options);
        } catch (const SingularityError& e) {
            throw SingularityError("fold " + std::to_string(fold) + ": " + e.what(), e.columns());
        }

        const MeasurementSet held_set = subset(data, held);
        const double fold_error = relative_error(fold_profile, held_set.rows);
        report.per_fold_errors.push_back(fold_error);
        pooled += static_cast<long double>(fold_error) * static_cast<long double>(size);
    }
    report.mean_relative_error = static_cast<double>(pooled / static_cast<long double>(total));

    const SolveResult full = solve_least_squares(data, options);
    report.profile = profile_from_solution(data, full);
    report.condition_diagnostic = full.condition_diagnostic;
    return report;
}

MeasurementSet read_measurements_csv(std::istream& in, DeviceKind device) {
    std::vector<std::string_view> required(kVariableNames.begin(), kVariableNames.end());
    required.push_back("measured_power_w");
    const csv::Header header = csv::read_header(in, required);

    std::array<std::size_t, kVariableCount> variable_index{};
    for (std::size_t i = 0; i < kVariableCount; ++i) {
        variable_index[i] = header.index_of(kVariableNames[i]);
    }
    const std::size_t power_index = header.index_of("measured_power_w");

    MeasurementSet data;
    data.device = device;
    std::string line;
    std::size_t line_number = 1;
    while (std::getline(in, line)) {
        ++line_number;
        if (line.empty() || line == "\r") continue;
        const auto fields = csv::split_row(line);
        if (fields.size() < header.columns.size()) {
            throw SchemaError("line " + std::to_string(line_number) + ": expected " +
                              std::to_string(header.columns.size()) + " fields, got " +
                              std::to_string(fields.size()));
        }
        Measurement m;
        try {
            m.variables.constant = csv::parse_double(fields[variable_index[0]]);
            m.variables.frame_rate = csv::parse_double(fields[variable_index[1]]);
            m.variables.pixels_per_second = csv::parse_double(fields[variable_index[2]]);
            m.variables.video_bitrate_kbps = csv::parse_double(fields[variable_index[3]]);
            m.variables.online_bitrate_kbps = csv::parse_double(fields[variable_index[4]]);
            m.variables.online_flag = csv::parse_double(fields[variable_index[5]]);
            m.variables.codec = csv::parse_double(fields[variable_index[6]]);
            m.measured_power_w = csv::parse_double(fields[power_index]);
        } catch (const ValidationError& e) {
            throw ValidationError("line " + std::to_string(line_number) + ": " + e.what());
        }
        data.rows.push_back(m);
    }
    data.validate();
    return data;
}

void write_measurements_csv(const MeasurementSet& data, std::ostream& out) {
    std::vector<std::string> fields(kVariableNames.begin(), kVariableNames.end());
    fields.emplace_back("measured_power_w");
    csv::write_row(out, fields);
    for (const Measurement& m : data.rows) {
        const auto vars = m.variables.as_array();
        fields.clear();
        for (const double v : vars) fields.push_back(csv::format_double(v));
        fields.push_back(csv::format_double(m.measured_power_w));
        csv::write_row(out, fields);
    }
}

}  // namespace streampower
