#include "flsched/config.hpp"

#include <gtest/gtest.h>

#include <algorithm>

#include "flsched/error.hpp"

namespace flsched {
namespace {

using nlohmann::json;

TEST(Config, DefaultsRoundTrip) {
  const json defaults = default_config_json();
  EXPECT_EQ(to_json(experiment_from_json(defaults)), defaults);
  EXPECT_EQ(to_json(experiment_from_json(json::object())), defaults);
  EXPECT_TRUE(experiment_from_json(defaults).run.violations().empty());
}

TEST(Config, PartialDocumentOverlaysDefaults) {
  const auto cfg = experiment_from_json(json::parse(R"({"rounds": 7, "channel": {"p": 0.3}})"));
  EXPECT_EQ(cfg.run.rounds, 7u);
  EXPECT_DOUBLE_EQ(cfg.run.channel.p, 0.3);
  EXPECT_EQ(cfg.run.channel.n_subchannels, ChannelConfig{}.n_subchannels);
}

TEST(Config, NonDefaultValuesRoundTrip) {
  const json doc = json::parse(R"({
    "policy": "aou_and_ds", "aou_threshold": "fixed:2.5", "growth": "constant:3",
    "learner": {"arch": "softmax"}, "dataset": {"kind": "idx", "train_images": "a", "train_labels": "b"},
    "partition": {"kind": "shards", "shards": 40, "per_client": 4},
    "sweep": {"policies": ["random", "aou"], "seeds": [3, 9]}})");
  const auto cfg = experiment_from_json(doc);
  EXPECT_EQ(cfg.run.policy.kind, PolicyKind::kAouAndShapley);
  EXPECT_EQ(cfg.run.policy.threshold, ThresholdRule::fixed(2.5));
  EXPECT_EQ(cfg.run.growth, Growth::constant_of(3));
  EXPECT_EQ(cfg.sweep.seeds, (std::vector<std::uint64_t>{3, 9}));
  ASSERT_EQ(cfg.sweep.policies.size(), 2u);
  const json again = to_json(cfg);
  EXPECT_EQ(to_json(experiment_from_json(again)), again);
  EXPECT_EQ(again, resolve_with_defaults(doc));
}

TEST(Config, UnknownKeyIsNamed) {
  try {
    experiment_from_json(json::parse(R"({"channel": {"pp": 0.3}})"));
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("channel.pp"), std::string::npos) << e.what();
  }
}

TEST(Config, WrongTypeIsRejected) {
  EXPECT_THROW(experiment_from_json(json::parse(R"({"rounds": "ten"})")), ConfigError);
  EXPECT_THROW(experiment_from_json(json::parse(R"({"rounds": -3})")), ConfigError);
  EXPECT_THROW(experiment_from_json(json::parse(R"({"channel": 5})")), ConfigError);
  EXPECT_THROW(experiment_from_json(json::parse(R"({"policy": "greedy"})")), ConfigError);
  EXPECT_THROW(experiment_from_json(json::parse(R"({"aou_threshold": "max"})")), ConfigError);
  EXPECT_THROW(experiment_from_json(json::parse("[1, 2]")), ConfigError);
}

TEST(Config, OverridesParseJsonWithStringFallback) {
  json doc = default_config_json();
  apply_override(doc, "channel.p=0.25");
  apply_override(doc, "policy=random");
  apply_override(doc, "sweep.seeds=[4,5]");
  apply_override(doc, "per_client_dump=true");
  EXPECT_EQ(doc["channel"]["p"], 0.25);
  EXPECT_EQ(doc["policy"], "random");
  EXPECT_EQ(doc["sweep"]["seeds"], json::parse("[4,5]"));
  EXPECT_EQ(doc["per_client_dump"], true);
  EXPECT_THROW(apply_override(doc, "channel.q=1"), ConfigError);
  EXPECT_THROW(apply_override(doc, "no_equals_sign"), ConfigError);
}

TEST(Config, ViolationsNameTheirKeys) {
  auto cfg = experiment_from_json(json::parse(R"({"channel": {"p": 1.5}, "rounds": 0})"));
  const auto v = cfg.run.violations();
  auto mentions = [&](const std::string& key) {
    return std::any_of(v.begin(), v.end(),
                       [&](const std::string& s) { return s.find(key) != std::string::npos; });
  };
  EXPECT_TRUE(mentions("channel.p"));
  EXPECT_TRUE(mentions("rounds"));
  EXPECT_THROW(cfg.run.validate(), ConfigError);
}

TEST(Config, ShippedExampleIsValid) {
  const auto doc = load_json_file(std::string(FLSCHED_SOURCE_DIR) + "/configs/example.json");
  const auto cfg = experiment_from_json(doc);
  EXPECT_TRUE(cfg.run.violations().empty());
  EXPECT_EQ(cfg.sweep.policies.size(), 4u);
  EXPECT_EQ(cfg.sweep.seeds.size(), 5u);
}

TEST(Config, MissingAndMalformedFiles) {
  EXPECT_THROW(load_json_file("/nonexistent/config.json"), IoError);
}

}  // namespace
}  // namespace flsched
