#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "hydronav/policy.hpp"

using namespace hydronav;
namespace fs = std::filesystem;

namespace {

MatX random_obs(int n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  MatX m(static_cast<Eigen::Index>(kObservationSize), n);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
  return m;
}

PolicyNetwork small_net(std::uint64_t seed) {
  PolicyNetwork net(static_cast<int>(kObservationSize), 8, 6, 6);
  std::mt19937_64 rng(seed);
  net.init_orthogonal(rng);
  // Push the heads away from their tiny initial scale so every path carries gradient.
  std::normal_distribution<double> n(0.0, 0.3);
  for (Eigen::Index i = 0; i < net.parameters().size(); ++i) net.parameters()(i) += n(rng);
  return net;
}

}  // namespace

TEST_CASE("argmax ties go to the lowest index") {
  VecX l = VecX::Constant(6, 0.25);
  CHECK(argmax_lowest(l) == 0);
  l(4) = 3.0;
  CHECK(argmax_lowest(l) == 4);
  l(2) = 3.0;
  CHECK(argmax_lowest(l) == 2);
  l.array() += 100.0;
  CHECK(argmax_lowest(l) == 2);
}

TEST_CASE("softmax columns are normalised and shift invariant") {
  std::mt19937_64 rng(1);
  MatX l = MatX::Random(5, 7) * 30.0;
  const MatX p = softmax_columns(l);
  for (Eigen::Index c = 0; c < p.cols(); ++c) CHECK(p.col(c).sum() == doctest::Approx(1.0).epsilon(1e-12));
  const MatX shifted = softmax_columns((l.array() + 1000.0).matrix());
  CHECK((p - shifted).cwiseAbs().maxCoeff() < 1e-12);
  const MatX lp = log_softmax_columns(l);
  CHECK((lp.array().exp().matrix() - p).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(lp.allFinite());
}

TEST_CASE("greedy action agrees with the batch forward") {
  const PolicyNetwork net = small_net(2);
  std::mt19937_64 rng(3);
  const MatX obs = random_obs(50, rng);
  const auto out = net.forward(obs);
  for (Eigen::Index c = 0; c < obs.cols(); ++c) {
    Observation o;
    for (std::size_t k = 0; k < kObservationSize; ++k) o[k] = obs(static_cast<Eigen::Index>(k), c);
    CHECK(net.greedy_action(o) == argmax_lowest(out.logits.col(c)));
    CHECK(net.forward(o).values(0) == doctest::Approx(out.values(c)).epsilon(1e-12));
  }
}

TEST_CASE("backward matches central differences on both heads") {
  PolicyNetwork net = small_net(4);
  std::mt19937_64 rng(5);
  const MatX obs = random_obs(16, rng);
  const MatX wl = MatX::Random(net.action_count(), 16);
  const VecX wv = VecX::Random(16);
  // Scalar test function: sum(wl .* logits) + sum(wv .* values).
  auto f = [&](const PolicyNetwork& n) {
    const auto o = n.forward(obs);
    return (wl.array() * o.logits.array()).sum() + wv.dot(o.values);
  };
  PolicyNetwork::Cache cache;
  net.forward(obs, &cache);
  VecX grad = VecX::Zero(static_cast<Eigen::Index>(net.parameter_count()));
  net.backward(cache, wl, wv, grad);
  const double h = 1e-6;
  double worst = 0.0;
  for (Eigen::Index i = 0; i < grad.size(); ++i) {
    const double keep = net.parameters()(i);
    net.parameters()(i) = keep + h;
    const double fp = f(net);
    net.parameters()(i) = keep - h;
    const double fm = f(net);
    net.parameters()(i) = keep;
    const double fd = (fp - fm) / (2 * h);
    worst = std::max(worst, std::abs(fd - grad(i)) / std::max(1e-6, std::abs(fd) + std::abs(grad(i))));
  }
  CHECK(worst < 1e-6);
}

TEST_CASE("orthogonal init gives orthonormal trunk rows and zero biases") {
  PolicyNetwork net(static_cast<int>(kObservationSize), 16, 16, 6);
  std::mt19937_64 rng(6);
  net.init_orthogonal(rng);
  const auto shapes = net.tensor_shapes();
  REQUIRE(shapes.size() == 8);
  // First tensor is the 16 x 31 input weight matrix.
  CHECK(shapes[0] == std::vector<std::uint32_t>{16, 31});
  Eigen::Map<const MatX> w1(net.parameters().data(), 16, 31);
  const MatX gram = w1 * w1.transpose() / 2.0;
  CHECK((gram - MatX::Identity(16, 16)).cwiseAbs().maxCoeff() < 1e-9);
  std::size_t total = 0;
  for (const auto& s : shapes) {
    std::size_t n = 1;
    for (auto d : s) n *= d;
    total += n;
  }
  CHECK(total == net.parameter_count());
}

TEST_CASE("adam moves against the gradient") {
  Adam opt(3);
  VecX p = VecX::Zero(3);
  const VecX g = (VecX(3) << 1.0, -2.0, 0.0).finished();
  opt.step(p, g, {});
  CHECK(p(0) == doctest::Approx(-3e-4).epsilon(1e-6));
  CHECK(p(1) == doctest::Approx(3e-4).epsilon(1e-6));
  CHECK(p(2) == 0.0);
  CHECK(opt.steps() == 1);
}

TEST_CASE("checkpoints round trip as f32 and reject corruption") {
  const fs::path dir = fs::temp_directory_path() / "hydronav_ckpt_test";
  fs::create_directories(dir);
  Checkpoint ck;
  ck.network = small_net(7);
  ck.timestep = 123456;
  ck.lesson = 2;
  ck.layout = ObservationLayout::bearing_distance_speed;
  save_checkpoint(dir / "a.ckpt", ck);
  const Checkpoint back = load_checkpoint(dir / "a.ckpt");
  CHECK(back.timestep == 123456);
  CHECK(back.lesson == 2);
  CHECK(back.layout == ObservationLayout::bearing_distance_speed);
  CHECK(back.network.hidden1() == 8);
  CHECK(back.network.hidden2() == 6);
  REQUIRE(back.network.parameter_count() == ck.network.parameter_count());
  for (Eigen::Index i = 0; i < ck.network.parameters().size(); ++i)
    CHECK(back.network.parameters()(i) == static_cast<double>(static_cast<float>(ck.network.parameters()(i))));

  // Saving the loaded network again reproduces the file byte for byte.
  save_checkpoint(dir / "b.ckpt", back);
  auto bytes = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
  };
  CHECK(bytes(dir / "a.ckpt") == bytes(dir / "b.ckpt"));

  const std::string full = bytes(dir / "a.ckpt");
  std::ofstream(dir / "short.ckpt", std::ios::binary) << full.substr(0, full.size() - 5);
  CHECK_THROWS_AS(load_checkpoint(dir / "short.ckpt"), DataError);
  std::string bad = full;
  bad[0] = 'X';
  std::ofstream(dir / "magic.ckpt", std::ios::binary) << bad;
  CHECK_THROWS_AS(load_checkpoint(dir / "magic.ckpt"), DataError);
  std::ofstream(dir / "long.ckpt", std::ios::binary) << full << "extra";
  CHECK_THROWS_AS(load_checkpoint(dir / "long.ckpt"), DataError);
  CHECK_THROWS_AS(load_checkpoint(dir / "missing.ckpt"), DataError);
  fs::remove_all(dir);
}
