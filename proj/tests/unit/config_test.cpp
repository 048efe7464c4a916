#include <string>

#include <gtest/gtest.h>
#include <json.hpp>

#include <cac/config.hpp>
#include <cac/error.hpp>

namespace {

TEST(Config, EmptyDocumentGivesDefaults) {
  const auto c = cac::parse_config("{}");
  EXPECT_EQ(c, cac::TrainConfig{});
  EXPECT_EQ(c.k, 3u);
  EXPECT_EQ(c.batch_size, 32u);
  EXPECT_EQ(c.momentum, 0.9);
  EXPECT_EQ(c.lr_feature_scale, 0.1);
  EXPECT_EQ(c.adapt_epochs, 30u);
  EXPECT_EQ(c.loss_mode, cac::LossMode::full);
}

TEST(Config, JsonRoundTrip) {
  cac::TrainConfig c;
  c.k = 4;
  c.beta = 5.0;
  c.loss_mode = cac::LossMode::neg_only;
  c.use_wsim = false;
  c.bank_fraction = 0.3;
  c.max_iter_override = 1234;
  c.shift.target_proportions = std::vector<double>{0.5, 0.25, 0.25};
  EXPECT_EQ(cac::parse_config(cac::config_to_json(c)), c);
}

TEST(Config, UnknownKeysRejected) {
  EXPECT_THROW(cac::parse_config(R"({"learning_rate": 0.1})"), cac::ConfigError);
  EXPECT_THROW(cac::parse_config(R"({"shift": {"sigma": 1}})"), cac::ConfigError);
}

TEST(Config, MalformedValuesRejected) {
  EXPECT_THROW(cac::parse_config("{"), cac::ConfigError);
  EXPECT_THROW(cac::parse_config(R"({"K": "three"})"), cac::ConfigError);
  EXPECT_THROW(cac::parse_config(R"({"loss_mode": "both"})"), cac::ConfigError);
  EXPECT_THROW(cac::parse_config(R"({"bank_fraction": 0})"), cac::ConfigError);
  EXPECT_THROW(cac::parse_config(R"({"bank_fraction": 1.5})"), cac::ConfigError);
  EXPECT_THROW(cac::parse_config(R"({"K": 300})"), cac::ConfigError);
  EXPECT_THROW(cac::parse_config(R"({"K": 90, "bank_fraction": 0.3})"), cac::ConfigError);
  EXPECT_THROW(cac::parse_config(R"({"batch_size": 1})"), cac::ConfigError);
  EXPECT_THROW(cac::parse_config(R"({"momentum": 1.0})"), cac::ConfigError);
  EXPECT_THROW(cac::parse_config(R"({"C": 4})"), cac::ConfigError);
}

TEST(Config, SingleMemberBatchAllowedWithoutNegatives) {
  EXPECT_NO_THROW(cac::parse_config(R"({"batch_size": 1, "loss_mode": "pos_only"})"));
}

TEST(Config, HashIsStableAndSensitive) {
  const cac::TrainConfig a;
  auto b = a;
  b.seed = 1;
  EXPECT_EQ(cac::config_hash(a), cac::config_hash(cac::TrainConfig{}));
  EXPECT_NE(cac::config_hash(a), cac::config_hash(b));
  EXPECT_EQ(cac::config_hash(a).size(), 16u);
}

TEST(Config, ReplicateShiftsBothSeeds) {
  cac::TrainConfig c;
  c.seed = 10;
  c.shift.seed = 20;
  const auto r = cac::replicate_config(c, 3);
  EXPECT_EQ(r.seed, 13u);
  EXPECT_EQ(r.shift.seed, 23u);
}

TEST(ShippedConfigs, DefaultMatchesBuiltIn) {
  EXPECT_EQ(cac::load_config(CAC_CONFIG_DIR "/default.json"), cac::TrainConfig{});
}

TEST(ShippedConfigs, ImbalancedDiffersOnlyInBetaAndProportions) {
  cac::TrainConfig expected;
  expected.beta = 5.0;
  expected.shift.target_proportions = std::vector<double>{0.5, 0.25, 0.25};
  EXPECT_EQ(cac::load_config(CAC_CONFIG_DIR "/imbalanced.json"), expected);
}

}  // namespace
