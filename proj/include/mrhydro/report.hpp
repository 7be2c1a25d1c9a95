#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "mrhydro/analysis.hpp"
#include "mrhydro/batch.hpp"

namespace mrhydro {

// Column order of the comparison table.
enum Column { kBandwidth, kRise, kOvershoot, kDev1Hz0, kDev1Hz10, kDev5Hz10, kNumColumns };

struct PublishedRow {
  ControllerKind kind;
  std::array<double, kNumColumns> values;
};

// Published hardware values (5 Hz column simulated by the authors).
const std::vector<PublishedRow>& published_rows();
const PublishedRow& published_row(ControllerKind kind);

struct MatrixOptions {
  std::vector<double> frf_grid = default_frf_grid();
  DwellOptions dwell{};
  double step_torque = 12.0;
  double backdrive_amplitude = kCalibratedBackdriveAmplitude;
  double sim_dt = kDefaultSimDt;
  bool noise = false;
  std::uint64_t seed = 1;
  bool parallel = true;
};

struct RowMeasurement {
  ControllerKind kind = ControllerKind::kOpenLoop;
  std::array<std::optional<double>, kNumColumns> values{};
  StepMetrics step{};
  std::vector<FrfPoint> frf;          // small-signal sine dwell
  std::optional<double> dwell_bandwidth_hz;
  std::vector<std::string> errors;  // per-cell failures
  std::vector<std::string> notes;   // measured but with caveats
};

// Runs step, sine-dwell FRF and the three backdrive cells for each controller.
std::vector<RowMeasurement> measure_matrix(const Experiment& exp,
                                           const std::vector<ControllerKind>& kinds,
                                           const MatrixOptions& options = {});

enum class Verdict { kPass, kFail, kNotGated, kAbsent };

struct ReportCell {
  std::optional<double> simulated;
  double published = 0.0;
  Verdict verdict = Verdict::kNotGated;
};

struct ReportRow {
  ControllerKind kind;
  std::array<ReportCell, kNumColumns> cells;
};

struct ComparisonReport {
  std::vector<ReportRow> rows;
  std::vector<std::string> checks;  // cross-row checks ("PASS ..." / "FAIL ...")
  std::vector<std::string> notes;   // per-row errors, caveats and dwell bandwidths
  bool all_pass = true;
};

// Pure function of the measurements.
ComparisonReport comparison_report(const std::vector<RowMeasurement>& rows);

std::string report_text(const ComparisonReport& report);
std::string report_csv(const ComparisonReport& report);

}  // namespace mrhydro
