#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "streampower/power_model.hpp"

namespace streampower {

// One measured playback: variable vector plus mean electrical power.
struct Measurement {
    VariableVector variables;
    double measured_power_w = 0.0;
};

struct MeasurementSet {
    DeviceKind device = DeviceKind::Laptop;
    std::vector<Measurement> rows;

    void validate() const;  // throws ValidationError
};

struct FitOptions {
    // Optional Tikhonov term applied to the column-equilibrated system.
    double ridge = 0.0;
    // Columns are declared collinear when the QR diagonal ratio drops below this.
    double rank_tolerance = 1e-10;
};

struct FitReport {
    DeviceProfile profile;  // fit on all rows
    // Pooled over all held-out rows; equals the mean of per-fold errors when
    // fold sizes are equal.
    double mean_relative_error = 0.0;
    std::vector<double> per_fold_errors;
    // max/min absolute R diagonal of the equilibrated design matrix.
    double condition_diagnostic = 0.0;
    std::uint64_t seed = 0;
    std::size_t folds = 0;
};

// Least-squares coefficients minimizing ||Vx - P||2. For desktop PCs the
// online-offset column is structurally zero and is excluded from the solve;
// the returned profile marks it not applicable.
DeviceProfile fit(const MeasurementSet& data, const FitOptions& options = {});

// Seeded shuffle, contiguous blocks, one fit per held-out fold, final profile
// fit on all rows.
FitReport cross_validate(const MeasurementSet& data, std::size_t folds, std::uint64_t seed,
                         const FitOptions& options = {});

// Mean relative estimation error of a profile over measurement rows.
double relative_error(const DeviceProfile& profile, std::span<const Measurement> rows);

// CSV with header columns matching the variable names plus measured_power_w.
MeasurementSet read_measurements_csv(std::istream& in, DeviceKind device);
void write_measurements_csv(const MeasurementSet& data, std::ostream& out);

}  // namespace streampower
