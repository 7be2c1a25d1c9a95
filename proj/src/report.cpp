#include "mrhydro/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <stdexcept>

namespace mrhydro {

namespace {

constexpr const char* kColumnNames[kNumColumns] = {
    "bandwidth_Hz", "rise_63_ms", "overshoot_pct", "dev_1Hz_0Nm", "dev_1Hz_10Nm", "dev_5Hz_10Nm"};

std::string fmt(double v, int decimals) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

const char* verdict_name(Verdict v) {
  switch (v) {
    case Verdict::kPass: return "ok";
    case Verdict::kFail: return "FAIL";
    case Verdict::kNotGated: return "-";
    case Verdict::kAbsent: return "absent";
  }
  return "-";
}

Verdict within(const std::optional<double>& v, double lo, double hi) {
  if (!v) return Verdict::kAbsent;
  return *v >= lo && *v <= hi ? Verdict::kPass : Verdict::kFail;
}

}  // namespace

const std::vector<PublishedRow>& published_rows() {
  static const std::vector<PublishedRow> rows = {
      {ControllerKind::kOpenLoop, {25, 16.6, 34, 0.60, 2.4, 4.2}},
      {ControllerKind::kOpenLoopCompensated, {25, 15.8, 38, 0.38, 1.2, 5.0}},
      {ControllerKind::kPidMaster, {11, 17.2, 10, 0.17, 0.5, 3.1}},
      {ControllerKind::kPidSlave, {3, 22.2, 2, 0.23, 0.5, 3.1}},
      {ControllerKind::kLqgi, {34, 14.4, 19, 0.24, 0.6, 1.8}},
  };
  return rows;
}

const PublishedRow& published_row(ControllerKind kind) {
  for (const PublishedRow& r : published_rows()) {
    if (r.kind == kind) return r;
  }
  throw std::invalid_argument("no published row");
}

std::vector<RowMeasurement> measure_matrix(const Experiment& exp,
                                           const std::vector<ControllerKind>& kinds,
                                           const MatrixOptions& options) {
  struct Slot {
    std::size_t row;
    int column;  // -1 for an FRF point
  };
  std::vector<Scenario> jobs;
  std::vector<Slot> slots;
  auto finish = [&](Scenario sc, std::size_t row, int column) {
    sc.noise = options.noise;
    sc.seed = options.seed;
    if (sc.sim_dt != options.sim_dt) {
      sc.sim_dt = options.sim_dt;
      sc.duration = std::ceil(sc.duration / sc.sim_dt - 1e-9) * sc.sim_dt;
    }
    jobs.push_back(sc);
    slots.push_back({row, column});
  };

  for (std::size_t r = 0; r < kinds.size(); ++r) {
    Scenario step = Scenario::make_step(kinds[r]);
    step.reference.step_torque = options.step_torque;
    finish(step, r, kRise);
    for (double f : options.frf_grid) {
      Scenario d = Scenario::make_sine_dwell(kinds[r], f, options.dwell.cycles);
      d.reference.offset_torque = options.dwell.offset_torque;
      d.reference.amplitude_torque = options.dwell.amplitude_torque;
      finish(d, r, -1);
    }
    const std::array<std::pair<int, std::pair<double, double>>, 3> backdrives = {{
        {kDev1Hz0, {1.0, 0.0}}, {kDev1Hz10, {1.0, 10.0}}, {kDev5Hz10, {5.0, 10.0}}}};
    for (const auto& [column, fc] : backdrives) {
      Scenario b = Scenario::make_backdrive(kinds[r], fc.first, fc.second);
      b.backdrive.amplitude = options.backdrive_amplitude;
      finish(b, r, column);
    }
  }

  const ControllerFactory factory = exp.factory();
  const std::vector<BatchResult> results = options.parallel
                                               ? run_batch(jobs, exp.plant, factory)
                                               : run_batch_serial(jobs, exp.plant, factory);

  std::vector<RowMeasurement> rows(kinds.size());
  for (std::size_t r = 0; r < kinds.size(); ++r) rows[r].kind = kinds[r];
  std::vector<bool> frf_good(kinds.size(), true);

  for (std::size_t j = 0; j < jobs.size(); ++j) {
    RowMeasurement& row = rows[slots[j].row];
    const BatchResult& res = results[j];
    const Scenario& sc = jobs[j];
    const std::string where = std::string(to_string(sc.kind));
    if (!res.ok()) {
      row.errors.push_back(where + ": " + (res.error.empty() ? res.trace.diagnostic : res.error));
      if (slots[j].column == -1) frf_good[slots[j].row] = false;
      continue;
    }
    try {
      if (slots[j].column == -1) {
        row.frf.push_back(dwell_point(res.trace, sc, exp.plant.geometry));
      } else if (slots[j].column == kRise) {
        row.step = step_metrics(res.trace, sc.reference.step_time);
        if (std::isfinite(row.step.bandwidth_hz)) row.values[kBandwidth] = row.step.bandwidth_hz;
        row.values[kRise] = row.step.rise_time_63_ms;
        row.values[kOvershoot] = row.step.overshoot_pct;
        if (!row.step.reliable) row.notes.push_back("step: response did not settle");
      } else {
        row.values[slots[j].column] = torque_deviation(res.trace, sc.backdrive.command_torque,
                                                       1.0 / sc.backdrive.frequency);
      }
    } catch (const std::exception& e) {
      row.errors.push_back(where + ": " + e.what());
      if (slots[j].column == -1) frf_good[slots[j].row] = false;
    }
  }
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (!frf_good[r] || rows[r].frf.empty()) continue;
    unwrap_phase(rows[r].frf);
    const Bandwidth bw = bandwidth(rows[r].frf);
    if (bw.found()) {
      rows[r].dwell_bandwidth_hz = bw.hz;
    } else {
      rows[r].errors.push_back("frf: no bandwidth crossing below 200 Hz");
    }
  }
  return rows;
}

ComparisonReport comparison_report(const std::vector<RowMeasurement>& measured) {
  ComparisonReport rep;
  std::map<ControllerKind, const RowMeasurement*> by_kind;
  for (const RowMeasurement& m : measured) by_kind[m.kind] = &m;
  auto value = [&](ControllerKind k, int c) -> std::optional<double> {
    const auto it = by_kind.find(k);
    if (it == by_kind.end()) return std::nullopt;
    return it->second->values[c];
  };
  const auto ol = ControllerKind::kOpenLoop;

  for (const RowMeasurement& m : measured) {
    ReportRow row{m.kind, {}};
    const PublishedRow& published = published_row(m.kind);
    for (int c = 0; c < kNumColumns; ++c) {
      row.cells[c].simulated = m.values[c];
      row.cells[c].published = published.values[c];
      row.cells[c].verdict = m.values[c] ? Verdict::kNotGated : Verdict::kAbsent;
    }
    auto& cells = row.cells;
    switch (m.kind) {
      case ControllerKind::kOpenLoop:
        cells[kBandwidth].verdict = within(m.values[kBandwidth], 25 * 0.7, 25 * 1.3);
        cells[kRise].verdict = within(m.values[kRise], 16.6 * 0.7, 16.6 * 1.3);
        cells[kOvershoot].verdict = within(m.values[kOvershoot], 34 - 12, 34 + 12);
        cells[kDev1Hz0].verdict = within(m.values[kDev1Hz0], 0.60 * 0.95, 0.60 * 1.05);
        cells[kDev5Hz10].verdict = within(m.values[kDev5Hz10], 4.2 - 1.2, 4.2 + 1.2);
        break;
      case ControllerKind::kPidMaster:
        cells[kBandwidth].verdict = within(m.values[kBandwidth], 11 - 3, 11 + 3);
        break;
      case ControllerKind::kPidSlave:
        cells[kBandwidth].verdict = within(m.values[kBandwidth], 3 - 1.5, 3 + 1.5);
        cells[kOvershoot].verdict = within(m.values[kOvershoot], 0.0, 5.0);
        break;
      case ControllerKind::kLqgi: {
        const auto ol_bw = value(ol, kBandwidth);
        const auto ol_rise = value(ol, kRise);
        const auto ol_os = value(ol, kOvershoot);
        cells[kBandwidth].verdict = within(
            m.values[kBandwidth], std::max(28.0, ol_bw.value_or(0.0)), 1e9);
        if (ol_os) cells[kOvershoot].verdict = within(m.values[kOvershoot], -1.0, *ol_os - 1e-9);
        if (ol_rise) cells[kRise].verdict = within(m.values[kRise], 0.0, *ol_rise);
        cells[kDev5Hz10].verdict = within(m.values[kDev5Hz10], 1.8 - 0.6, 1.8 + 0.6);
        break;
      }
      case ControllerKind::kOpenLoopCompensated:
        break;
    }
    for (const ReportCell& c : row.cells) {
      if (c.verdict == Verdict::kFail || c.verdict == Verdict::kAbsent) rep.all_pass = false;
    }
    rep.rows.push_back(row);

    const std::string who = std::string(to_string(m.kind)) + ": ";
    for (const std::string& e : m.errors) rep.notes.push_back(who + "error " + e);
    for (const std::string& n : m.notes) rep.notes.push_back(who + n);
    if (m.dwell_bandwidth_hz) {
      rep.notes.push_back(who + "small-signal dwell bandwidth " + fmt(*m.dwell_bandwidth_hz, 1) +
                          " Hz");
    }
  }

  // 5 Hz ordering across rows, when all five are present.
  const auto lq = value(ControllerKind::kLqgi, kDev5Hz10);
  const auto pm = value(ControllerKind::kPidMaster, kDev5Hz10);
  const auto ps = value(ControllerKind::kPidSlave, kDev5Hz10);
  const auto o = value(ol, kDev5Hz10);
  const auto fc = value(ControllerKind::kOpenLoopCompensated, kDev5Hz10);
  if (lq && pm && ps && o && fc) {
    const bool ordered = *lq < std::min(*pm, *ps) && std::max(*pm, *ps) < *o && *o < *fc;
    rep.checks.push_back(std::string(ordered ? "PASS" : "FAIL") +
                         " 5 Hz ordering lqgi < pid_master, pid_slave < open_loop < open_loop_comp");
    rep.all_pass = rep.all_pass && ordered;
  }
  return rep;
}

std::string report_text(const ComparisonReport& report) {
  const int width = 22;
  auto pad = [](std::string s, std::size_t w) {
    if (s.size() < w) s.append(w - s.size(), ' ');
    return s;
  };
  std::string out = pad("controller", 16);
  for (const char* name : kColumnNames) out += pad(name, width);
  out += "\n";
  out += std::string(16 + width * kNumColumns, '-') + "\n";
  const int decimals[kNumColumns] = {1, 1, 1, 2, 2, 2};
  for (const ReportRow& row : report.rows) {
    out += pad(std::string(to_string(row.kind)), 16);
    for (int c = 0; c < kNumColumns; ++c) {
      const ReportCell& cell = row.cells[c];
      std::string s = cell.simulated ? fmt(*cell.simulated, decimals[c]) : std::string("n/a");
      s += " (" + fmt(cell.published, decimals[c]) + ") " + verdict_name(cell.verdict);
      out += pad(s, width);
    }
    out += "\n";
  }
  out += "values: simulated (published) verdict\n";
  for (const std::string& c : report.checks) out += c + "\n";
  for (const std::string& n : report.notes) out += "note " + n + "\n";
  out += std::string("overall: ") + (report.all_pass ? "PASS" : "FAIL") + "\n";
  return out;
}

std::string report_csv(const ComparisonReport& report) {
  std::string out = "controller";
  for (const char* name : kColumnNames) {
    out += std::string(",") + name + "," + name + "_published," + name + "_verdict";
  }
  out += "\n";
  for (const ReportRow& row : report.rows) {
    out += std::string(to_string(row.kind));
    for (const ReportCell& cell : row.cells) {
      out += "," + (cell.simulated ? fmt(*cell.simulated, 6) : std::string()) + "," +
             fmt(cell.published, 2) + "," + verdict_name(cell.verdict);
    }
    out += "\n";
  }
  return out;
}

}  // namespace mrhydro
