#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "mrhydro/controllers.hpp"
#include "mrhydro/sim.hpp"

namespace mrhydro {

// Builds a fresh controller for one scenario. Called concurrently from the
// parallel runner, so it must not mutate shared state.
using ControllerFactory = std::function<std::unique_ptr<Controller>(const Scenario&)>;

struct BatchResult {
  SimTrace trace;
  std::string error;  // exception text when the run threw

  [[nodiscard]] bool ok() const { return error.empty() && !trace.aborted; }
};

// Everything needed to instantiate any of the five controllers.
struct Experiment {
  PlantParams plant;
  ControllerSettings settings;
  GainSet gains;

  [[nodiscard]] ControllerFactory factory() const;
};

// Runs each scenario on its own controller; results keep the input order.
std::vector<BatchResult> run_batch(const std::vector<Scenario>& jobs, const PlantParams& plant,
                                   const ControllerFactory& factory);

// Reference implementation: same work, one thread.
std::vector<BatchResult> run_batch_serial(const std::vector<Scenario>& jobs,
                                          const PlantParams& plant,
                                          const ControllerFactory& factory);

}  // namespace mrhydro
