#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <cmath>
#include <limits>
#include <random>

#include "hydronav/common.hpp"
#include "hydronav/rewards.hpp"

using namespace hydronav;

TEST_CASE("sparse constants") {
  CHECK(sparse_reward(StepEvent::goal) == 10.0);
  CHECK(sparse_reward(StepEvent::collision) == -10.0);
  CHECK(sparse_reward(StepEvent::timeout) == -1.0);
  CHECK(sparse_reward(StepEvent::none) == 0.0);
}

TEST_CASE("dense substitution") {
  CHECK(dense_reward(1.0, 1.0, false, true) == 500.0);
  CHECK(dense_reward(1.0, 0.998, false, false) == doctest::Approx(0.01).epsilon(1e-12));
  CHECK(dense_reward(1.0, 1.0, true, false) == doctest::Approx(-0.02).epsilon(1e-12));
  CHECK(dense_reward(1.0, 1.0, false, false) == doctest::Approx(-0.01).epsilon(1e-12));
  // Moving away is penalised symmetrically.
  CHECK(dense_reward(1.0, 1.002, false, false) == doctest::Approx(-0.03).epsilon(1e-12));
}

TEST_CASE("goal replaces the other dense terms") {
  CHECK(dense_reward(5.0, 0.1, true, true) == 500.0);
}

TEST_CASE("non-finite distances are rejected") {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const double inf = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(dense_reward(nan, 1.0, false, false), ContractViolation);
  CHECK_THROWS_AS(dense_reward(1.0, inf, false, false), ContractViolation);
  CHECK_THROWS_AS(movement_reward(1.0, nan), ContractViolation);
}

TEST_CASE("sensor penalty") {
  std::array<double, 28> rays;
  rays.fill(1.0);
  CHECK(sensor_penalty(rays) == 0.0);
  rays[3] = 0.5;
  CHECK(sensor_penalty(rays) == doctest::Approx(-0.5 * 0.6 / 28.0).epsilon(1e-12));
  CHECK(sensor_penalty(rays) == doctest::Approx(-0.010714).epsilon(1e-4));
  rays.fill(0.0);
  CHECK(sensor_penalty(rays) == doctest::Approx(-0.6).epsilon(1e-12));
  rays[0] = 1.2;
  CHECK_THROWS_AS(sensor_penalty(rays), ContractViolation);
  rays[0] = -0.01;
  CHECK_THROWS_AS(sensor_penalty(rays), ContractViolation);
}

TEST_CASE("sensor penalty stays within its range for random readings") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::array<double, 28> rays;
  for (int i = 0; i < 1000; ++i) {
    for (double& v : rays) v = u(rng);
    const double s = sensor_penalty(rays);
    CHECK(s <= 0.0);
    CHECK(s >= -0.6);
  }
}

TEST_CASE("overrides flow through the config") {
  RewardConfig c;
  c.dense_goal = 42.0;
  c.movement_scale = 2.0;
  c.timestep = 0.0;
  CHECK(dense_reward(0, 0, false, true, c) == 42.0);
  CHECK(dense_reward(3.0, 1.0, false, false, c) == 4.0);
  c.sparse_collision = -3.0;
  CHECK(sparse_reward(StepEvent::collision, c) == -3.0);
}

TEST_CASE("config validation and mode names") {
  RewardConfig c;
  CHECK_NOTHROW(c.validate());
  c.sensor_scale = -1.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = RewardConfig{};
  c.timestep = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(c.validate(), ConfigError);
  for (auto m : {RewardMode::sparse, RewardMode::dense, RewardMode::safety})
    CHECK(parse_reward_mode(to_string(m)) == m);
  CHECK_THROWS_AS(parse_reward_mode("shaped"), ConfigError);
}
