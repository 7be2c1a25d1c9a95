#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mrhydro/analysis.hpp"
#include "mrhydro/sim.hpp"

namespace mrhydro {

// Provenance line written first in every output file.
struct OutputStamp {
  std::string config_hash;
  std::uint64_t seed = 0;
  std::string what;  // e.g. "step lqgi"
};

std::string stamp_line(const OutputStamp& stamp);

// One row per recorded sample; the header names columns with units.
std::string trace_to_csv(const SimTrace& trace, const OutputStamp& stamp);
std::string frf_to_csv(const std::vector<FrfPoint>& frf, const OutputStamp& stamp);

void write_text_file(const std::string& path, const std::string& content);

}  // namespace mrhydro
