#include "hydronav/policy.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include <Eigen/QR>

namespace hydronav {

using MatMap = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic>>;
using VecMap = Eigen::Map<const VecX>;

struct PolicyNetwork::Views {
  MatMap w1;
  VecMap b1;
  MatMap w2;
  VecMap b2;
  MatMap wp;
  VecMap bp;
  MatMap wv;
  VecMap bv;
};

PolicyNetwork::PolicyNetwork(int input, int hidden1, int hidden2, int actions)
    : in_(input), h1_(hidden1), h2_(hidden2), out_(actions) {
  if (input <= 0 || hidden1 <= 0 || hidden2 <= 0 || actions <= 0)
    throw ConfigError("network sizes must be positive");
  const std::size_t n = static_cast<std::size_t>(h1_) * in_ + h1_ + static_cast<std::size_t>(h2_) * h1_ + h2_ +
                        static_cast<std::size_t>(out_) * h2_ + out_ + h2_ + 1;
  params_ = VecX::Zero(static_cast<Eigen::Index>(n));
}

PolicyNetwork::Views PolicyNetwork::views(const double* p) const {
  const double* w1 = p;
  const double* b1 = w1 + h1_ * in_;
  const double* w2 = b1 + h1_;
  const double* b2 = w2 + h2_ * h1_;
  const double* wp = b2 + h2_;
  const double* bp = wp + out_ * h2_;
  const double* wv = bp + out_;
  const double* bv = wv + h2_;
  return {MatMap(w1, h1_, in_), VecMap(b1, h1_), MatMap(w2, h2_, h1_), VecMap(b2, h2_),
          MatMap(wp, out_, h2_), VecMap(bp, out_), MatMap(wv, 1, h2_), VecMap(bv, 1)};
}

std::vector<std::vector<std::uint32_t>> PolicyNetwork::tensor_shapes() const {
  auto u = [](int x) { return static_cast<std::uint32_t>(x); };
  return {{u(h1_), u(in_)}, {u(h1_)}, {u(h2_), u(h1_)}, {u(h2_)},
          {u(out_), u(h2_)}, {u(out_)}, {1, u(h2_)}, {1}};
}

namespace {

MatX orthogonal(int rows, int cols, double gain, std::mt19937_64& rng) {
  std::normal_distribution<double> n01(0.0, 1.0);
  const int big = std::max(rows, cols), small = std::min(rows, cols);
  MatX a(big, small);
  for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = n01(rng);
  Eigen::HouseholderQR<MatX> qr(a);
  MatX q = qr.householderQ() * MatX::Identity(big, small);
  // Sign fix makes the decomposition unique.
  const MatX r = qr.matrixQR().topRows(small).triangularView<Eigen::Upper>();
  for (int j = 0; j < small; ++j)
    if (r(j, j) < 0) q.col(j) *= -1.0;
  MatX w = rows >= cols ? q : MatX(q.transpose());
  return gain * w;
}

}  // namespace

void PolicyNetwork::init_orthogonal(std::mt19937_64& rng) {
  params_.setZero();
  double* p = params_.data();
  auto put = [&](const MatX& m) {
    Eigen::Map<MatX>(p, m.rows(), m.cols()) = m;
    p += m.size();
  };
  put(orthogonal(h1_, in_, std::sqrt(2.0), rng));
  p += h1_;
  put(orthogonal(h2_, h1_, std::sqrt(2.0), rng));
  p += h2_;
  put(orthogonal(out_, h2_, 0.01, rng));
  p += out_;
  put(orthogonal(1, h2_, 1.0, rng));
}

PolicyNetwork::Output PolicyNetwork::forward(const MatX& obs, Cache* cache) const {
  if (obs.rows() != in_) throw ContractViolation("observation size does not match the network input");
  const Views v = views(params_.data());
  MatX h1 = ((v.w1 * obs).colwise() + v.b1).array().tanh().matrix();
  MatX h2 = ((v.w2 * h1).colwise() + v.b2).array().tanh().matrix();
  Output out;
  out.logits = (v.wp * h2).colwise() + v.bp;
  out.values = ((v.wv * h2).array() + v.bv(0)).matrix().transpose();
  if (cache) {
    cache->input = obs;
    cache->h1 = std::move(h1);
    cache->h2 = std::move(h2);
  }
  return out;
}

PolicyNetwork::Output PolicyNetwork::forward(const Observation& obs) const {
  return forward(Eigen::Map<const MatX>(obs.data(), static_cast<Eigen::Index>(obs.size()), 1));
}

void PolicyNetwork::backward(const Cache& c, const MatX& d_logits, const VecX& d_values, VecX& grad) const {
  if (grad.size() != params_.size()) grad = VecX::Zero(params_.size());
  const Views v = views(params_.data());
  double* g = grad.data();
  auto acc = [&](const MatX& m) {
    Eigen::Map<MatX>(g, m.rows(), m.cols()) += m;
    g += m.size();
  };
  // Head gradients.
  const MatX dv = d_values.transpose();  // 1 x B
  MatX dh2 = v.wp.transpose() * d_logits + v.wv.transpose() * dv;
  dh2.array() *= 1.0 - c.h2.array().square();
  MatX dh1 = v.w2.transpose() * dh2;
  dh1.array() *= 1.0 - c.h1.array().square();

  acc(dh1 * c.input.transpose());
  acc(dh1.rowwise().sum());
  acc(dh2 * c.h1.transpose());
  acc(dh2.rowwise().sum());
  acc(d_logits * c.h2.transpose());
  acc(d_logits.rowwise().sum());
  acc(dv * c.h2.transpose());
  acc(dv.rowwise().sum());
}

int argmax_lowest(const VecX& logits) {
  int best = 0;
  for (int i = 1; i < logits.size(); ++i)
    if (logits(i) > logits(best)) best = i;
  return best;
}

int PolicyNetwork::greedy_action(const Observation& obs) const { return argmax_lowest(forward(obs).logits.col(0)); }

MatX log_softmax_columns(const MatX& logits) {
  MatX out(logits.rows(), logits.cols());
  for (Eigen::Index j = 0; j < logits.cols(); ++j) {
    const double m = logits.col(j).maxCoeff();
    const double lse = m + std::log((logits.col(j).array() - m).exp().sum());
    out.col(j) = logits.col(j).array() - lse;
  }
  return out;
}

MatX softmax_columns(const MatX& logits) { return log_softmax_columns(logits).array().exp().matrix(); }

Adam::Adam(std::size_t n) : m_(VecX::Zero(static_cast<Eigen::Index>(n))), v_(VecX::Zero(static_cast<Eigen::Index>(n))) {}

void Adam::step(VecX& params, const VecX& grad, const AdamConfig& cfg) {
  if (m_.size() != params.size()) *this = Adam(static_cast<std::size_t>(params.size()));
  ++t_;
  m_ = cfg.beta1 * m_ + (1.0 - cfg.beta1) * grad;
  v_ = cfg.beta2 * v_ + (1.0 - cfg.beta2) * grad.cwiseProduct(grad);
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t_));
  params.array() -= cfg.lr * (m_.array() / c1) / ((v_.array() / c2).sqrt() + cfg.eps);
}

// ---------------------------------------------------------------------------

namespace {

template <typename T>
void put_le(std::ostream& out, T v) {
  static_assert(std::endian::native == std::endian::little, "little-endian host required");
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get_le(std::istream& in, const std::filesystem::path& path) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(T))) throw DataError("checkpoint " + path.string() + " is truncated");
  return v;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint " + path.string());
  out.write("HNCK", 4);
  put_le<std::uint32_t>(out, kCheckpointVersion);
  put_le<std::uint64_t>(out, ck.timestep);
  put_le<std::uint32_t>(out, ck.lesson);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(ck.layout));
  const auto shapes = ck.network.tensor_shapes();
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(shapes.size()));
  for (const auto& s : shapes) {
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
    for (auto d : s) put_le<std::uint32_t>(out, d);
  }
  const VecX& p = ck.network.parameters();
  for (Eigen::Index i = 0; i < p.size(); ++i) put_le<float>(out, static_cast<float>(p(i)));
  if (!out) throw DataError("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, "HNCK", 4) != 0)
    throw DataError(path.string() + " is not a checkpoint (bad magic)");
  const auto version = get_le<std::uint32_t>(in, path);
  if (version != kCheckpointVersion)
    throw DataError("checkpoint " + path.string() + " has unsupported version " + std::to_string(version));
  Checkpoint ck;
  ck.timestep = get_le<std::uint64_t>(in, path);
  ck.lesson = get_le<std::uint32_t>(in, path);
  const auto layout = get_le<std::uint32_t>(in, path);
  if (layout > 1) throw DataError("checkpoint " + path.string() + " has an unknown observation layout");
  ck.layout = static_cast<ObservationLayout>(layout);
  const auto n = get_le<std::uint32_t>(in, path);
  if (n != 8) throw DataError("checkpoint " + path.string() + " has " + std::to_string(n) + " tensors, expected 8");
  std::vector<std::vector<std::uint32_t>> shapes(n);
  for (auto& s : shapes) {
    const auto rank = get_le<std::uint32_t>(in, path);
    if (rank < 1 || rank > 2) throw DataError("checkpoint " + path.string() + " has a tensor of rank " + std::to_string(rank));
    s.resize(rank);
    for (auto& d : s) {
      d = get_le<std::uint32_t>(in, path);
      if (d == 0 || d > (1u << 16)) throw DataError("checkpoint " + path.string() + " has an invalid tensor shape");
    }
  }
  if (shapes[0].size() != 2 || shapes[2].size() != 2 || shapes[4].size() != 2)
    throw DataError("checkpoint " + path.string() + " has malformed weight shapes");
  PolicyNetwork net(static_cast<int>(shapes[0][1]), static_cast<int>(shapes[0][0]), static_cast<int>(shapes[2][0]),
                    static_cast<int>(shapes[4][0]));
  if (net.tensor_shapes() != shapes) throw DataError("checkpoint " + path.string() + " has inconsistent tensor shapes");
  VecX& p = net.parameters();
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    const float f = get_le<float>(in, path);
    if (!std::isfinite(f)) throw DataError("checkpoint " + path.string() + " contains non-finite parameters");
    p(i) = f;
  }
  if (in.peek() != std::char_traits<char>::eof())
    throw DataError("checkpoint " + path.string() + " has trailing bytes");
  ck.network = std::move(net);
  return ck;
}

}  // namespace hydronav
