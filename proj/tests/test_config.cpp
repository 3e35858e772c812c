#include <string>

#include <gtest/gtest.h>

#include "gflow/config.hpp"

using namespace gflow;

namespace {

const std::string kConfigs = std::string(GFLOW_SOURCE_DIR) + "/configs/";

Json minimal() { return Json::parse(R"({"schema_version": 1, "scenario": {"kind": "sphere"}})"); }

// Field named by the ConfigError thrown for `doc`, or "" if it parses.
std::string error_field(const Json& doc) {
  try {
    parse_config(doc);
  } catch (const ConfigError& e) {
    return e.field();
  }
  return "";
}

std::string error_text(const Json& doc) {
  try {
    parse_config(doc);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(Config, ShippedFilesParse) {
  const RunConfig s = load_config(kConfigs + "sphere.json");
  EXPECT_TRUE(std::holds_alternative<SphereScenario>(s.scenario));
  EXPECT_EQ(s.mode, RunMode::Flow);
  EXPECT_DOUBLE_EQ(s.step.spacing, 0.01);

  const RunConfig c = load_config(kConfigs + "cylinder.json");
  EXPECT_DOUBLE_EQ(std::get<CylinderScenario>(c.scenario).length, 20.0);

  const RunConfig d = load_config(kConfigs + "dumbbell.json");
  EXPECT_EQ(d.mode, RunMode::Surgery);
  EXPECT_DOUBLE_EQ(d.g1, 2.5);
  EXPECT_DOUBLE_EQ(d.g2, 5.0);
  EXPECT_DOUBLE_EQ(d.g3, 10.0);
  EXPECT_TRUE(d.neck_g0_set);
  EXPECT_DOUBLE_EQ(d.neck.g0, 5.0);
  EXPECT_TRUE(d.monitor_threshold_set);
  EXPECT_EQ(d.seed, 1u);
  EXPECT_DOUBLE_EQ(*d.neck.d_sharp, 0.125);

  const RunConfig t = load_config(kConfigs + "three_bulb.json");
  EXPECT_EQ(std::get<ThreeBulbScenario>(t.scenario).waists, (std::vector<double>{0.3, 0.33}));
  EXPECT_STREQ(scenario_name(t.scenario), "three_bulb");
}

TEST(Config, Defaults) {
  const RunConfig c = parse_config(minimal());
  EXPECT_EQ(c.n, 3);
  EXPECT_FALSE(c.neck_g0_set);
  EXPECT_FALSE(c.monitor_threshold_set);
  EXPECT_FALSE(c.t_end);
  EXPECT_DOUBLE_EQ(c.neck.rho_coefficient, 0.8);
  EXPECT_DOUBLE_EQ(c.loop.cap.spacing, c.step.spacing);
}

TEST(Config, UnknownFieldsAreRejected) {
  Json doc = minimal();
  doc["colour"] = "red";
  EXPECT_EQ(error_field(doc), "colour");
  doc = minimal();
  doc["neck"] = {{"epsilonn", 0.1}};
  EXPECT_EQ(error_field(doc), "neck.epsilonn");
  doc = minimal();
  doc["surgery"] = {{"dichotomy", {{"g_sharp", 1.0}, {"extra", 1}}}};
  EXPECT_EQ(error_field(doc), "surgery.dichotomy.extra");
}

TEST(Config, SchemaVersion) {
  Json doc = minimal();
  doc.erase("schema_version");
  EXPECT_EQ(error_field(doc), "schema_version");
  doc["schema_version"] = 2;
  EXPECT_EQ(error_field(doc), "schema_version");
}

TEST(Config, ScenarioChecks) {
  Json doc = minimal();
  doc["scenario"] = {{"kind", "torus"}};
  EXPECT_EQ(error_field(doc), "scenario.kind");
  doc["scenario"] = {{"kind", "dumbbell"}, {"waist_r", 1.5}};
  EXPECT_EQ(error_field(doc), "scenario.waist_r");
  doc["scenario"] = {{"kind", "three_bulb"}, {"waists", {0.3}}};
  EXPECT_EQ(error_field(doc), "scenario.waists");
  doc["scenario"] = {{"kind", "from_file"}};
  EXPECT_EQ(error_field(doc), "scenario.path");
  doc["scenario"] = {{"kind", "sphere"}, {"r0", -1.0}};
  EXPECT_EQ(error_field(doc), "scenario.r0");
}

TEST(Config, ThresholdChain) {
  Json doc = minimal();
  doc["thresholds"] = {{"g1", 2.0}, {"g2", 1.0}, {"g3", 4.0}};
  EXPECT_NE(error_text(doc).find("threshold chain"), std::string::npos);
  doc["thresholds"] = {{"g1", 2.0}, {"omega2", 0.5}};
  EXPECT_NE(error_text(doc).find("threshold chain"), std::string::npos);
  doc["thresholds"] = {{"g1", 2.0}, {"omega2", 2.0}, {"g3", 9.0}};
  EXPECT_EQ(error_field(doc), "thresholds");
  doc["thresholds"] = {{"g1", 1.0}, {"omega2", 3.0}, {"omega3", 1.5}};
  const RunConfig c = parse_config(doc);
  EXPECT_DOUBLE_EQ(c.g2, 3.0);
  EXPECT_DOUBLE_EQ(c.g3, 4.5);
}

TEST(Config, NeckRanges) {
  Json doc = minimal();
  doc["neck"] = {{"theta", 0.2}};
  EXPECT_EQ(error_field(doc), "neck.theta");
  doc["neck"] = {{"theta", 0.2}, {"c_sharp", 0.5}};  // d_sharp = 1/4
  EXPECT_EQ(error_field(doc), "");
  doc["neck"] = {{"epsilon", 0.3}};
  EXPECT_EQ(error_field(doc), "neck.epsilon");
  doc["neck"] = {{"L", 5}};
  EXPECT_EQ(error_field(doc), "neck.L");
  doc["step"] = {{"cfl", 0.6}};
  doc.erase("neck");
  EXPECT_EQ(error_field(doc), "step.cfl");
}

TEST(Config, Overrides) {
  Json doc = minimal();
  apply_override(doc, "neck.epsilon=0.05");
  apply_override(doc, "mode=surgery");
  apply_override(doc, "scenario={\"kind\":\"cylinder\",\"length\":3}");
  apply_override(doc, "stop.t_end=0.25");
  const RunConfig c = parse_config(doc);
  EXPECT_DOUBLE_EQ(c.neck.epsilon, 0.05);
  EXPECT_EQ(c.mode, RunMode::Surgery);
  EXPECT_DOUBLE_EQ(std::get<CylinderScenario>(c.scenario).length, 3.0);
  EXPECT_DOUBLE_EQ(*c.t_end, 0.25);
  EXPECT_THROW(apply_override(doc, "no_equals"), ConfigError);
  EXPECT_THROW(apply_override(doc, "neck..g0=1"), ConfigError);
  EXPECT_THROW(apply_override(doc, "mode.x=1"), ConfigError);

  const RunConfig d = load_config(kConfigs + "dumbbell.json", {"thresholds.omega3=3"});
  EXPECT_DOUBLE_EQ(d.g3, 15.0);
  EXPECT_THROW(load_config(kConfigs + "missing.json"), ConfigError);
}
