#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <vector>

#include <Eigen/Core>

#include "hydronav/common.hpp"
#include "hydronav/env.hpp"

namespace hydronav {

using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;

/// Shared tanh trunk (input -> h1 -> h2) with a logits head and a scalar
/// value head. All weights live in one flat vector so the optimiser and
/// checkpoints treat them uniformly.
class PolicyNetwork {
 public:
  struct Output {
    MatX logits;  // actions x batch
    VecX values;  // batch
  };
  /// Intermediate activations kept for backprop.
  struct Cache {
    MatX input, h1, h2;
  };

  PolicyNetwork() = default;
  PolicyNetwork(int input, int hidden1, int hidden2, int actions);

  int input_size() const { return in_; }
  int hidden1() const { return h1_; }
  int hidden2() const { return h2_; }
  int action_count() const { return out_; }
  std::size_t parameter_count() const { return params_.size(); }

  VecX& parameters() { return params_; }
  const VecX& parameters() const { return params_; }

  /// Orthogonal weights (gain sqrt(2) trunk, 0.01 logits, 1 value), zero biases.
  void init_orthogonal(std::mt19937_64& rng);

  /// Batch forward; columns of `obs` are observations.
  Output forward(const MatX& obs, Cache* cache = nullptr) const;
  Output forward(const Observation& obs) const;

  /// Accumulate the gradient of a loss given its derivatives with respect to
  /// logits and values of the batch in `cache`.
  void backward(const Cache& cache, const MatX& d_logits, const VecX& d_values, VecX& grad) const;

  /// Argmax of the logits; ties go to the lowest index.
  int greedy_action(const Observation& obs) const;

  /// Shapes of the weight/bias tensors in storage order.
  std::vector<std::vector<std::uint32_t>> tensor_shapes() const;

 private:
  struct Views;
  Views views(const double* base) const;

  int in_ = 0, h1_ = 0, h2_ = 0, out_ = 0;
  VecX params_;
};

/// Lowest-index argmax of a logit vector.
int argmax_lowest(const VecX& logits);
/// Numerically stable softmax / log-softmax of each column.
MatX softmax_columns(const MatX& logits);
MatX log_softmax_columns(const MatX& logits);

struct AdamConfig {
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class Adam {
 public:
  Adam() = default;
  explicit Adam(std::size_t n);
  void step(VecX& params, const VecX& grad, const AdamConfig& cfg);
  std::uint64_t steps() const { return t_; }

 private:
  VecX m_, v_;
  std::uint64_t t_ = 0;
};

// Checkpoint: little-endian {"HNCK", u32 version, u64 timestep, u32 lesson,
// u32 observation layout, u32 tensor count, per tensor {u32 rank, u32 dims...}}
// followed by every parameter as f32 in tensor order.
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  PolicyNetwork network;
  std::uint64_t timestep = 0;
  std::uint32_t lesson = 0;
  ObservationLayout layout = ObservationLayout::bearing_speed_yawrate;
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck);
/// Throws DataError on a missing, truncated or malformed file.
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace hydronav
