#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "hydronav/ppo.hpp"

using namespace hydronav;

namespace {

std::vector<double> brute_gae(const std::vector<double>& r, const std::vector<double>& v,
                              const std::vector<std::uint8_t>& term, double gamma, double lambda) {
  const std::size_t n = r.size();
  std::vector<double> adv(n);
  for (std::size_t t = 0; t < n; ++t) {
    double total = 0.0, weight = 1.0;
    for (std::size_t k = t; k < n; ++k) {
      const double delta = r[k] + gamma * v[k + 1] * (term[k] ? 0.0 : 1.0) - v[k];
      total += weight * delta;
      if (term[k]) break;
      weight *= gamma * lambda;
    }
    adv[t] = total;
  }
  return adv;
}

PolicyNetwork tiny_net(std::uint64_t seed, int hidden = 8) {
  PolicyNetwork net(static_cast<int>(kObservationSize), hidden, hidden, 6);
  std::mt19937_64 rng(seed);
  net.init_orthogonal(rng);
  std::normal_distribution<double> n(0.0, 0.3);
  for (Eigen::Index i = 0; i < net.parameters().size(); ++i) net.parameters()(i) += n(rng);
  return net;
}

/// Random batch whose old log-probabilities sit near the network's own.
Batch random_batch(const PolicyNetwork& net, int n, std::uint64_t seed, double logp_jitter) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::normal_distribution<double> g(0.0, 1.0);
  Batch b;
  b.obs.resize(static_cast<Eigen::Index>(kObservationSize), n);
  for (Eigen::Index i = 0; i < b.obs.size(); ++i) b.obs.data()[i] = u(rng);
  const MatX logp = log_softmax_columns(net.forward(b.obs).logits);
  b.actions.resize(static_cast<std::size_t>(n));
  b.logp_old.resize(n);
  b.advantages.resize(n);
  b.returns.resize(n);
  std::uniform_int_distribution<int> pick(0, net.action_count() - 1);
  for (int i = 0; i < n; ++i) {
    const int a = pick(rng);
    b.actions[static_cast<std::size_t>(i)] = a;
    b.logp_old(i) = logp(a, i) + logp_jitter * u(rng);
    b.advantages(i) = g(rng);
    b.returns(i) = g(rng);
  }
  return b;
}

double fd_worst(PolicyNetwork net, const Batch& b, double clip, double vc, double ec) {
  VecX grad;
  ppo_loss(net, b, clip, vc, ec, &grad);
  const double h = 1e-6;
  double worst = 0.0;
  for (Eigen::Index i = 0; i < grad.size(); ++i) {
    const double keep = net.parameters()(i);
    net.parameters()(i) = keep + h;
    const double fp = ppo_loss(net, b, clip, vc, ec).loss;
    net.parameters()(i) = keep - h;
    const double fm = ppo_loss(net, b, clip, vc, ec).loss;
    net.parameters()(i) = keep;
    const double fd = (fp - fm) / (2 * h);
    const double scale = std::max(std::abs(fd), std::abs(grad(i)));
    if (scale > 1e-7) worst = std::max(worst, std::abs(fd - grad(i)) / scale);
  }
  return worst;
}

PpoConfig small_config() {
  PpoConfig c;
  c.hidden1 = c.hidden2 = 16;
  c.num_envs = 4;
  c.rollout_length = 100;
  c.minibatch = 100;
  c.epochs = 2;
  c.maps_per_lesson = 2;
  c.log_interval = 200;
  return c;
}

Scenario mini_train1() {
  Scenario s = archetype_scenario("train1", 0);
  s.segments = 1;
  s.segment_length = 2.5;
  return s;
}

}  // namespace

TEST_CASE("gae limits") {
  const std::vector<double> r{1.5}, v{0.2, 0.7};
  const std::vector<std::uint8_t> nt{0};
  const auto td0 = compute_gae(r, v, nt, 0.9, 0.0);
  CHECK(td0.advantages[0] == doctest::Approx(1.5 + 0.9 * 0.7 - 0.2).epsilon(1e-15));
  const auto g0 = compute_gae(r, v, nt, 0.0, 0.95);
  CHECK(g0.advantages[0] == doctest::Approx(1.5 - 0.2).epsilon(1e-15));
  CHECK(g0.returns[0] == doctest::Approx(1.5).epsilon(1e-15));
  const std::vector<std::uint8_t> t{1};
  CHECK(compute_gae(r, v, t, 0.9, 0.95).advantages[0] == doctest::Approx(1.3).epsilon(1e-15));
}

TEST_CASE("gae equals the double-loop sum on random rollouts") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> g(0.0, 2.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 100;
    std::vector<double> r(n), v(n + 1);
    std::vector<std::uint8_t> term(n);
    for (auto& x : r) x = g(rng);
    for (auto& x : v) x = g(rng);
    for (auto& x : term) x = u(rng) < 0.05 ? 1 : 0;
    const double gamma = 0.9 + 0.099 * u(rng);
    const auto res = compute_gae(r, v, term, gamma, 0.95);
    const auto ref = brute_gae(r, v, term, gamma, 0.95);
    for (std::size_t i = 0; i < n; ++i) {
      worst = std::max(worst, std::abs(res.advantages[i] - ref[i]));
      worst = std::max(worst, std::abs(res.returns[i] - (ref[i] + v[i])));
    }
  }
  CHECK(worst <= 1e-10);
}

TEST_CASE("gae rejects misaligned arrays") {
  const std::vector<double> r{1, 2}, v{0, 0};
  const std::vector<std::uint8_t> t{0, 0};
  CHECK_THROWS_AS(compute_gae(r, v, t, 0.99, 0.95), ContractViolation);
  const std::vector<double> v3{0, 0, 0};
  const std::vector<std::uint8_t> t1{0};
  CHECK_THROWS_AS(compute_gae(r, v3, t1, 0.99, 0.95), ContractViolation);
}

TEST_CASE("at ratio one the surrogate gradient is the vanilla policy gradient") {
  const PolicyNetwork net = tiny_net(1);
  const Batch b = random_batch(net, 32, 2, 0.0);
  VecX grad;
  ppo_loss(net, b, 0.2, 0.0, 0.0, &grad);

  // Gradient of -(1/n) sum A log pi(a|s) by central differences.
  auto pg = [&](const PolicyNetwork& n) {
    const MatX lp = log_softmax_columns(n.forward(b.obs).logits);
    double s = 0.0;
    for (Eigen::Index i = 0; i < b.size(); ++i) s -= b.advantages(i) * lp(b.actions[static_cast<std::size_t>(i)], i);
    return s / static_cast<double>(b.size());
  };
  PolicyNetwork probe = net;
  double worst = 0.0;
  for (Eigen::Index i = 0; i < grad.size(); ++i) {
    const double keep = probe.parameters()(i);
    probe.parameters()(i) = keep + 1e-6;
    const double fp = pg(probe);
    probe.parameters()(i) = keep - 1e-6;
    const double fm = pg(probe);
    probe.parameters()(i) = keep;
    worst = std::max(worst, std::abs((fp - fm) / 2e-6 - grad(i)));
  }
  CHECK(worst < 1e-8);
  CHECK(ppo_loss(net, b, 0.2, 0.0, 0.0).clip_fraction == 0.0);
}

TEST_CASE("clipped samples contribute no policy gradient") {
  const PolicyNetwork net = tiny_net(3);
  Batch b = random_batch(net, 1, 4, 0.0);
  b.advantages(0) = 1.7;
  b.logp_old(0) -= 0.5;  // ratio e^0.5 > 1.2
  VecX grad;
  const LossTerms t = ppo_loss(net, b, 0.2, 0.0, 0.0, &grad);
  CHECK(t.clip_fraction == 1.0);
  CHECK(grad.cwiseAbs().maxCoeff() == 0.0);
  // Same sample with a negative advantage sits on the unclipped branch.
  b.advantages(0) = -1.7;
  ppo_loss(net, b, 0.2, 0.0, 0.0, &grad);
  CHECK(grad.cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("loss gradient matches finite differences on a tiny network") {
  const PolicyNetwork net = tiny_net(5);
  const Batch b = random_batch(net, 32, 6, 0.3);
  CHECK(fd_worst(net, b, 0.2, 0.5, 0.01) <= 1e-4);
  // Each head on its own.
  CHECK(fd_worst(net, b, 0.2, 0.0, 0.0) <= 1e-4);
  CHECK(fd_worst(net, b, 0.2, 1.0, 0.0) <= 1e-4);
  CHECK(fd_worst(net, b, 0.2, 0.0, 0.05) <= 1e-4);
}

TEST_CASE("clip fraction grows with the update step size") {
  const PolicyNetwork net0 = tiny_net(7, 16);
  const Batch b = random_batch(net0, 256, 8, 0.0);
  PpoConfig cfg;
  cfg.minibatch = 64;
  cfg.epochs = 4;
  std::vector<double> fractions;
  for (double lr : {1e-4, 1e-3, 1e-2}) {
    PolicyNetwork net = net0;
    Adam opt(net.parameter_count());
    std::mt19937_64 rng(9);
    ppo_update(net, opt, b, cfg, 0.2, lr, rng);
    fractions.push_back(ppo_loss(net, b, 0.2, 0.0, 0.0).clip_fraction);
  }
  CHECK(fractions[0] <= fractions[1]);
  CHECK(fractions[1] <= fractions[2]);
  CHECK(fractions[2] > 0.0);
}

TEST_CASE("non-finite batches raise a numerical error") {
  PolicyNetwork net = tiny_net(10);
  Batch b = random_batch(net, 16, 11, 0.0);
  b.returns(3) = std::numeric_limits<double>::quiet_NaN();
  Adam opt(net.parameter_count());
  std::mt19937_64 rng(1);
  PpoConfig cfg;
  cfg.minibatch = 16;
  CHECK_THROWS_AS(ppo_update(net, opt, b, cfg, 0.2, 3e-4, rng), NumericalError);
}

TEST_CASE("standard plan schedule") {
  const CurriculumPlan p = CurriculumPlan::standard();
  REQUIRE(p.lessons.size() == 3);
  CHECK(p.lessons[0].scenario.source == "train1");
  CHECK(p.lessons[1].scenario.source == "train2");
  CHECK(p.lessons[2].scenario.source == "train3");
  CHECK(p.lessons[0].clip == 0.2);
  CHECK(p.lessons[1].clip == 0.1);
  CHECK(p.lessons[2].clip == 0.1);
  CHECK(p.lessons[2].lr == doctest::Approx(p.lessons[1].lr * 0.1).epsilon(1e-12));
  CHECK(p.total_budget() == 300000);
}

TEST_CASE("lesson settings switch exactly at the budget boundary") {
  CurriculumPlan plan;
  plan.lessons = {{"a", mini_train1(), 1024, 0.2, 3e-4},
                  {"b", mini_train1(), 1024, 0.1, 3e-4},
                  {"c", mini_train1(), 1024, 0.1, 3e-5}};
  struct Seen {
    std::int64_t t;
    int lesson;
    double clip, lr;
  };
  std::vector<Seen> seen;
  TrainHooks hooks;
  hooks.on_update = [&](std::int64_t t, int lesson, const UpdateStats& s) { seen.push_back({t, lesson, s.clip, s.lr}); };
  const TrainResult r = train(plan, small_config(), 1, hooks);
  CHECK(r.timesteps == 3072);
  bool hit1 = false, hit2 = false;
  for (const auto& s : seen) {
    const int expect = s.t <= 1024 ? 0 : s.t <= 2048 ? 1 : 2;
    CHECK(s.lesson == expect);
    CHECK(s.clip == plan.lessons[static_cast<std::size_t>(expect)].clip);
    CHECK(s.lr == plan.lessons[static_cast<std::size_t>(expect)].lr);
    hit1 = hit1 || s.t == 1024;
    hit2 = hit2 || s.t == 2048;
  }
  CHECK(hit1);
  CHECK(hit2);
}

TEST_CASE("training curves are reproducible for a seed") {
  const CurriculumPlan plan = CurriculumPlan::single(mini_train1(), 4000);
  const PpoConfig cfg = small_config();
  const TrainResult a = train(plan, cfg, 21);
  const TrainResult b = train(plan, cfg, 21);
  const TrainResult c = train(plan, cfg, 22);
  std::ostringstream sa, sb, sc;
  write_curve_csv(sa, a.curve);
  write_curve_csv(sb, b.curve);
  write_curve_csv(sc, c.curve);
  CHECK(sa.str() == sb.str());
  CHECK(a.network.parameters() == b.network.parameters());
  CHECK(a.network.parameters() != c.network.parameters());
  CHECK(sa.str().rfind("timestep,mean_return,success_rate,collision_rate", 0) == 0);
}

TEST_CASE("resume continues from the checkpoint timestep") {
  const CurriculumPlan plan = CurriculumPlan::single(mini_train1(), 2000);
  const PpoConfig cfg = small_config();
  const TrainResult first = train(plan, cfg, 3);
  Checkpoint ck{first.network, 1200, 0, cfg.layout};
  const TrainResult rest = train(plan, cfg, 3, {}, &ck);
  CHECK(rest.timesteps == 2000);
  for (const auto& p : rest.curve) CHECK(p.timestep > 1200);
  Checkpoint wrong = ck;
  wrong.network = PolicyNetwork(static_cast<int>(kObservationSize), 4, 4, 6);
  CHECK_THROWS_AS(train(plan, cfg, 3, {}, &wrong), ConfigError);
}

TEST_CASE("training config parsing") {
  using nlohmann::json;
  const TrainConfig std_plan = train_config_from_json(json{{"ppo", {{"num_envs", 8}}}});
  CHECK(std_plan.plan.lessons.size() == 3);

  const TrainConfig one = train_config_from_json(json::parse(R"({
      "ppo": {"hidden": [64, 64], "gamma": 0.995, "reward_mode": "safety"},
      "lessons": [{"scenario": "train1", "segments": 1, "segment_length": 2.5, "budget": 8000, "lr": 1e-3}]})"));
  CHECK(one.ppo.hidden1 == 64);
  CHECK(one.ppo.gamma == 0.995);
  CHECK(one.ppo.reward_mode == RewardMode::safety);
  REQUIRE(one.plan.lessons.size() == 1);
  CHECK(one.plan.lessons[0].scenario.segments == 1);
  CHECK(one.plan.lessons[0].lr == 1e-3);
  CHECK(one.plan.lessons[0].clip == 0.2);

  const char* bad[] = {
      R"({"ppo": {"gama": 0.9}})",
      R"({"extra": 1})",
      R"({"lessons": []})",
      R"({"lessons": {"scenario": "train1"}})",
      R"({"lessons": [{"scenario": "train1", "budget": 100, "bogus": 1}]})",
      R"({"lessons": [{"scenario": "train1"}]})",
      R"({"lessons": [{"scenario": "train1", "budget": 1001}]})",
      R"({"lessons": [{"scenario": "cave9", "budget": 800}]})",
      R"({"ppo": {"hidden": [64]}})",
      R"({"ppo": {"gamma": "high"}})",
      R"({"ppo": {"layout": "polar"}})",
      R"([1, 2])",
  };
  for (const char* b : bad) CHECK_THROWS_AS(train_config_from_json(json::parse(b)), ConfigError);
}
