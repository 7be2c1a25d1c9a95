#include "mrhydro/batch.hpp"

#include <exception>

namespace mrhydro {

namespace {

BatchResult run_one(const Scenario& sc, const PlantParams& plant,
                    const ControllerFactory& factory) {
  BatchResult r;
  try {
    auto controller = factory(sc);
    r.trace = run_scenario(sc, plant, *controller);
  } catch (const std::exception& e) {
    r.error = e.what();
  }
  return r;
}

}  // namespace

ControllerFactory Experiment::factory() const {
  return [this](const Scenario& sc) {
    return make_controller(sc.controller, settings, plant, &gains);
  };
}

std::vector<BatchResult> run_batch(const std::vector<Scenario>& jobs, const PlantParams& plant,
                                   const ControllerFactory& factory) {
  std::vector<BatchResult> results(jobs.size());
  const auto n = static_cast<long>(jobs.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (long i = 0; i < n; ++i) {
    results[i] = run_one(jobs[i], plant, factory);
  }
  return results;
}

std::vector<BatchResult> run_batch_serial(const std::vector<Scenario>& jobs,
                                          const PlantParams& plant,
                                          const ControllerFactory& factory) {
  std::vector<BatchResult> results;
  results.reserve(jobs.size());
  for (const Scenario& sc : jobs) results.push_back(run_one(sc, plant, factory));
  return results;
}

}  // namespace mrhydro
