#include "mrhydro/trace_io.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace mrhydro {

namespace {

void append_number(std::string& out, double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  out += buf;
}

}  // namespace

std::string stamp_line(const OutputStamp& stamp) {
  return "# mrhydro config_hash=" + stamp.config_hash + " seed=" + std::to_string(stamp.seed) +
         " run=" + stamp.what + "\n";
}

std::string trace_to_csv(const SimTrace& trace, const OutputStamp& stamp) {
  std::string out = stamp_line(stamp);
  out +=
      "t_s,torque_Nm,torque_desired_Nm,p_master_Pa,p_slave_Pa,p_desired_Pa,current_A,"
      "force_command_N,pressure_command_Pa,x1_m,v1_m_s,x2_m,v2_m_s,x3_m,v3_m_s,f_mr_N,"
      "meas_x1_m,meas_v1_m_s,meas_x3_m,meas_p_master_Pa,meas_p_slave_Pa,saturated\n";
  for (std::size_t i = 0; i < trace.size(); ++i) {
    const double row[] = {trace.t[i],
                          trace.torque[i],
                          trace.torque_desired[i],
                          trace.p_master[i],
                          trace.p_slave[i],
                          trace.p_desired[i],
                          trace.current[i],
                          trace.force_command[i],
                          trace.pressure_command[i],
                          trace.x[i][0],
                          trace.x[i][1],
                          trace.x[i][2],
                          trace.x[i][3],
                          trace.x[i][4],
                          trace.x[i][5],
                          trace.x[i][6],
                          trace.y[i].x1,
                          trace.y[i].v1,
                          trace.y[i].x3,
                          trace.y[i].p_master,
                          trace.y[i].p_slave};
    for (double v : row) {
      append_number(out, v);
      out += ',';
    }
    out += std::to_string(trace.saturated[i]);
    out += '\n';
  }
  return out;
}

std::string frf_to_csv(const std::vector<FrfPoint>& frf, const OutputStamp& stamp) {
  std::string out = stamp_line(stamp);
  out += "frequency_Hz,magnitude_dB,phase_deg,fit_residual,flagged\n";
  for (const FrfPoint& p : frf) {
    append_number(out, p.frequency);
    out += ',';
    append_number(out, p.magnitude_db);
    out += ',';
    append_number(out, p.phase_deg);
    out += ',';
    append_number(out, p.fit_residual);
    out += p.flagged ? ",1\n" : ",0\n";
  }
  return out;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write '" + path + "'");
  f << content;
  if (!f) throw std::runtime_error("write failed for '" + path + "'");
}

}  // namespace mrhydro
