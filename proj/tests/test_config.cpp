#include <gtest/gtest.h>

#include "mrhydro/config.hpp"
#include "mrhydro/synthesis.hpp"

using namespace mrhydro;

TEST(Config, UnknownKeyNamesItsPath) {
  const Json patch = Json::parse(R"({"controllers": {"weights": {"rhoo": 1.0}}})");
  try {
    apply_config_patch(RunConfig{}, patch);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("controllers.weights.rhoo"), std::string::npos);
  }
}

TEST(Config, WrongTypeIsRejected) {
  const Json patch = Json::parse(R"({"scenario": {"noise": "yes"}})");
  EXPECT_THROW(apply_config_patch(RunConfig{}, patch), ConfigError);
}

TEST(Config, InvalidValuesAreRejected) {
  EXPECT_THROW(apply_config_patch(RunConfig{}, Json::parse(R"({"scenario": {"sim_dt": 0}})")),
               ConfigError);
  EXPECT_THROW(apply_config_patch(RunConfig{}, Json::parse(R"({"scenario": {"dwell_cycles": 3}})")),
               ConfigError);
  EXPECT_THROW(
      apply_config_patch(RunConfig{}, Json::parse(R"({"selection": {"controller": "lqr"}})")),
      ConfigError);
  EXPECT_THROW(
      apply_config_patch(RunConfig{}, Json::parse(R"({"selection": {"frequency": -1}})")),
      ConfigError);
}

TEST(Config, PatchOverridesOnlyNamedFields) {
  const RunConfig c =
      apply_config_patch(RunConfig{}, Json::parse(R"({"seed": 9, "scenario": {"noise": true}})"));
  EXPECT_EQ(c.seed, 9u);
  EXPECT_TRUE(c.scenario.noise);
  EXPECT_EQ(to_json(c.plant), to_json(RunConfig{}.plant));
}

TEST(Config, JsonRoundTripIsLossless) {
  RunConfig c;
  c.seed = 123;
  c.scenario.step_torque = 7.5;
  c.selection.only = {"lqgi", "open_loop"};
  c.controllers.weights.rho = 3.25;
  const RunConfig back = run_config_from_json(to_json(c));
  EXPECT_EQ(to_json(back).dump(), to_json(c).dump());
}

TEST(Config, GainsRoundTrip) {
  const GainSet g = synthesize(PlantParams{}, CostWeights{}, NoiseCovariances{});
  const GainSet back = gain_set_from_json(Json::parse(to_json(g).dump()));
  EXPECT_TRUE(back.K == g.K);
  EXPECT_TRUE(back.L == g.L);
  EXPECT_EQ(back.K_ff, g.K_ff);
  EXPECT_EQ(back.plant_hash, g.plant_hash);
}

TEST(Config, HashIsStableAndIgnoresOutputDir) {
  RunConfig a, b;
  b.output_dir = "elsewhere";
  EXPECT_EQ(config_hash(a), config_hash(b));
  EXPECT_EQ(config_hash(a).size(), 16u);
  b.seed = 2;
  EXPECT_NE(config_hash(a), config_hash(b));
  PlantParams p;
  const std::string h = plant_hash(p);
  p.transmission.m1 += 1e-9;
  EXPECT_NE(plant_hash(p), h);
}

TEST(Config, Fnv1aKnownVectors) {
  EXPECT_EQ(fnv1a_hex(""), "cbf29ce484222325");
  EXPECT_EQ(fnv1a_hex("a"), "af63dc4c8601ec8c");
}
