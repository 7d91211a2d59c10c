#include "hydronav/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>

namespace hydronav {

GaeResult compute_gae(std::span<const double> rewards, std::span<const double> values,
                      std::span<const std::uint8_t> terminals, double gamma, double lambda) {
  const std::size_t n = rewards.size();
  if (values.size() != n + 1)
    throw ContractViolation("compute_gae: values must have one more entry than rewards (bootstrap)");
  if (terminals.size() != n) throw ContractViolation("compute_gae: terminals and rewards differ in length");
  if (!(gamma >= 0 && gamma <= 1 && lambda >= 0 && lambda <= 1))
    throw ContractViolation("compute_gae: gamma and lambda must lie in [0, 1]");
  GaeResult out;
  out.advantages.assign(n, 0.0);
  out.returns.assign(n, 0.0);
  double last = 0.0;
  for (std::size_t k = n; k-- > 0;) {
    const double live = terminals[k] ? 0.0 : 1.0;
    const double delta = rewards[k] + gamma * values[k + 1] * live - values[k];
    last = delta + gamma * lambda * live * last;
    out.advantages[k] = last;
    out.returns[k] = last + values[k];
  }
  return out;
}

void PpoConfig::validate() const {
  if (!(gamma >= 0 && gamma <= 1 && lambda >= 0 && lambda <= 1)) throw ConfigError("gamma and lambda must lie in [0, 1]");
  if (!(clip > 0)) throw ConfigError("clip must be > 0");
  if (!(lr > 0)) throw ConfigError("learning rate must be > 0");
  if (rollout_length <= 0 || num_envs <= 0 || minibatch <= 0 || epochs <= 0 || hidden1 <= 0 || hidden2 <= 0 ||
      maps_per_lesson <= 0 || log_interval <= 0 || curve_window <= 0)
    throw ConfigError("PPO counts must be > 0");
  if (entropy_coef < 0 || value_coef < 0 || !(max_grad_norm > 0))
    throw ConfigError("entropy/value coefficients must be >= 0 and max_grad_norm > 0");
}

CurriculumPlan CurriculumPlan::standard() {
  return {{{"train1", archetype_scenario("train1", 0), 150000, 0.2, 3e-4},
           {"train2", archetype_scenario("train2", 0), 100000, 0.1, 3e-4},
           {"train3", archetype_scenario("train3", 0), 50000, 0.1, 3e-5}}};
}

CurriculumPlan CurriculumPlan::single(const Scenario& s, std::int64_t budget, double clip, double lr) {
  return {{{s.source, s, budget, clip, lr}}};
}

std::int64_t CurriculumPlan::total_budget() const {
  std::int64_t t = 0;
  for (const auto& l : lessons) t += l.budget;
  return t;
}

void CurriculumPlan::validate(const PpoConfig& cfg) const {
  if (lessons.empty()) throw ConfigError("curriculum needs at least one lesson");
  for (const auto& l : lessons) {
    if (l.budget <= 0) throw ConfigError("lesson '" + l.name + "': budget must be > 0");
    if (l.budget % cfg.num_envs != 0)
      throw ConfigError("lesson '" + l.name + "': budget must be a multiple of num_envs (" +
                        std::to_string(cfg.num_envs) + ")");
    if (!(l.clip > 0) || !(l.lr > 0)) throw ConfigError("lesson '" + l.name + "': clip and lr must be > 0");
    if ((l.scenario.mode == WorldMode::surface) != (lessons.front().scenario.mode == WorldMode::surface))
      throw ConfigError("all lessons must share one world mode (the action set is fixed by the network)");
  }
}

Batch Batch::subset(std::span<const Eigen::Index> idx) const {
  Batch b;
  const auto n = static_cast<Eigen::Index>(idx.size());
  b.obs.resize(obs.rows(), n);
  b.actions.resize(idx.size());
  b.logp_old.resize(n);
  b.advantages.resize(n);
  b.returns.resize(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const Eigen::Index i = idx[static_cast<std::size_t>(k)];
    b.obs.col(k) = obs.col(i);
    b.actions[static_cast<std::size_t>(k)] = actions[static_cast<std::size_t>(i)];
    b.logp_old(k) = logp_old(i);
    b.advantages(k) = advantages(i);
    b.returns(k) = returns(i);
  }
  return b;
}

LossTerms ppo_loss(const PolicyNetwork& net, const Batch& batch, double clip, double value_coef, double entropy_coef,
                   VecX* grad) {
  const Eigen::Index n = batch.size();
  if (n == 0) throw ContractViolation("ppo_loss: empty batch");
  if (static_cast<Eigen::Index>(batch.actions.size()) != n || batch.logp_old.size() != n ||
      batch.advantages.size() != n || batch.returns.size() != n)
    throw ContractViolation("ppo_loss: batch arrays differ in length");
  PolicyNetwork::Cache cache;
  const auto out = net.forward(batch.obs, grad ? &cache : nullptr);
  const MatX logp = log_softmax_columns(out.logits);
  const MatX p = logp.array().exp().matrix();
  const double inv_n = 1.0 / static_cast<double>(n);

  LossTerms t;
  MatX d_logits;
  VecX d_values;
  if (grad) {
    d_logits = MatX::Zero(out.logits.rows(), n);
    d_values = VecX::Zero(n);
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    const int a = batch.actions[static_cast<std::size_t>(i)];
    if (a < 0 || a >= out.logits.rows()) throw ContractViolation("ppo_loss: action index out of range");
    const double log_ratio = logp(a, i) - batch.logp_old(i);
    const double ratio = std::exp(log_ratio);
    const double adv = batch.advantages(i);
    const double unclipped = ratio * adv;
    const double clipped = std::clamp(ratio, 1.0 - clip, 1.0 + clip) * adv;
    t.policy_loss -= std::min(unclipped, clipped);
    if (std::abs(ratio - 1.0) > clip) t.clip_fraction += 1.0;
    t.approx_kl += (ratio - 1.0) - log_ratio;
    double h = 0.0;
    for (Eigen::Index j = 0; j < p.rows(); ++j) h -= p(j, i) * logp(j, i);
    t.entropy += h;
    const double err = out.values(i) - batch.returns(i);
    t.value_loss += err * err;
    if (grad) {
      // d(-min(.))/dlogp is -A*ratio on the unclipped branch, zero otherwise.
      const double d_lp = unclipped <= clipped ? -adv * ratio : 0.0;
      for (Eigen::Index j = 0; j < p.rows(); ++j) {
        const double onehot = j == a ? 1.0 : 0.0;
        d_logits(j, i) = inv_n * (d_lp * (onehot - p(j, i)) + entropy_coef * p(j, i) * (logp(j, i) + h));
      }
      d_values(i) = inv_n * 2.0 * value_coef * err;
    }
  }
  t.policy_loss *= inv_n;
  t.value_loss *= inv_n;
  t.entropy *= inv_n;
  t.clip_fraction *= inv_n;
  t.approx_kl *= inv_n;
  t.loss = t.policy_loss + value_coef * t.value_loss - entropy_coef * t.entropy;
  if (grad) {
    *grad = VecX::Zero(static_cast<Eigen::Index>(net.parameter_count()));
    net.backward(cache, d_logits, d_values, *grad);
  }
  return t;
}

namespace {

std::string batch_snapshot(const Batch& b) {
  std::ostringstream os;
  os << "batch of " << b.size() << ": obs range [" << b.obs.minCoeff() << ", " << b.obs.maxCoeff()
     << "], advantage range [" << b.advantages.minCoeff() << ", " << b.advantages.maxCoeff() << "], return range ["
     << b.returns.minCoeff() << ", " << b.returns.maxCoeff() << "], logp_old range [" << b.logp_old.minCoeff() << ", "
     << b.logp_old.maxCoeff() << "]";
  return os.str();
}

}  // namespace

UpdateStats ppo_update(PolicyNetwork& net, Adam& opt, const Batch& batch_in, const PpoConfig& cfg, double clip,
                       double lr, std::mt19937_64& rng) {
  Batch batch = batch_in;
  const Eigen::Index n = batch.size();
  if (n == 0) throw ContractViolation("ppo_update: empty batch");
  if (cfg.normalize_advantages && n > 1) {
    const double mean = batch.advantages.mean();
    const double sd = std::sqrt((batch.advantages.array() - mean).square().sum() / static_cast<double>(n));
    batch.advantages = ((batch.advantages.array() - mean) / (sd + 1e-8)).matrix();
  }
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  const AdamConfig adam{lr};
  UpdateStats stats;
  stats.clip = clip;
  stats.lr = lr;
  VecX grad;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    // Fisher-Yates with our own engine keeps the order library-independent.
    for (std::size_t i = order.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(rng() % i);
      std::swap(order[i - 1], order[j]);
    }
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.minibatch)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.minibatch));
      const Batch mb = batch.subset(std::span<const Eigen::Index>(order.data() + start, end - start));
      const LossTerms t = ppo_loss(net, mb, clip, cfg.value_coef, cfg.entropy_coef, &grad);
      if (!std::isfinite(t.loss) || !grad.allFinite())
        throw NumericalError("non-finite PPO loss or gradient; " + batch_snapshot(mb));
      const double norm = grad.norm();
      if (norm > cfg.max_grad_norm) grad *= cfg.max_grad_norm / norm;
      opt.step(net.parameters(), grad, adam);
      if (!net.parameters().allFinite()) throw NumericalError("non-finite network parameters after update; " + batch_snapshot(mb));
      stats.mean.loss += t.loss;
      stats.mean.policy_loss += t.policy_loss;
      stats.mean.value_loss += t.value_loss;
      stats.mean.entropy += t.entropy;
      stats.mean.clip_fraction += t.clip_fraction;
      stats.mean.approx_kl += t.approx_kl;
      ++stats.minibatches;
    }
  }
  const double k = 1.0 / std::max(1, stats.minibatches);
  stats.mean.loss *= k;
  stats.mean.policy_loss *= k;
  stats.mean.value_loss *= k;
  stats.mean.entropy *= k;
  stats.mean.clip_fraction *= k;
  stats.mean.approx_kl *= k;
  return stats;
}

// ---------------------------------------------------------------------------

namespace {

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a * 0x9E3779B97F4A7C15ull + b + 0x632BE59BD9B4E019ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

struct EpisodeRecord {
  double ret;
  bool success;
  bool collided;
};

struct Worker {
  std::unique_ptr<Environment> env;
  Observation obs{};
  double ret = 0.0;
  bool collided = false;
};

}  // namespace

TrainResult train(const CurriculumPlan& plan, const PpoConfig& cfg, std::uint64_t seed, const TrainHooks& hooks,
                  const Checkpoint* resume) {
  cfg.validate();
  plan.validate(cfg);
  std::mt19937_64 rng(mix_seed(seed, 0));
  const int n_actions =
      cfg.env.actions.empty()
          ? static_cast<int>(ActionSpec::for_mode(plan.lessons.front().scenario.mode, cfg.env.vehicle).size())
          : static_cast<int>(cfg.env.actions.size());

  TrainResult result;
  result.network = PolicyNetwork(static_cast<int>(kObservationSize), cfg.hidden1, cfg.hidden2, n_actions);
  result.network.init_orthogonal(rng);
  std::int64_t timestep = 0;
  if (resume) {
    const PolicyNetwork& r = resume->network;
    if (r.input_size() != result.network.input_size() || r.hidden1() != cfg.hidden1 || r.hidden2() != cfg.hidden2 ||
        r.action_count() != n_actions)
      throw ConfigError("checkpoint network shape does not match the training configuration");
    if (resume->layout != cfg.layout) throw ConfigError("checkpoint observation layout does not match the configuration");
    result.network.parameters() = r.parameters();
    timestep = static_cast<std::int64_t>(resume->timestep);
  }
  PolicyNetwork& net = result.network;
  Adam opt(net.parameter_count());

  std::deque<EpisodeRecord> window;
  std::int64_t next_log = (timestep / cfg.log_interval + 1) * cfg.log_interval;
  std::int64_t next_eval =
      hooks.eval_interval > 0 ? (timestep / hooks.eval_interval + 1) * hooks.eval_interval : -1;
  auto emit_curve = [&](std::int64_t at, int lesson) {
    if (window.empty()) return;
    CurvePoint cp;
    cp.timestep = at;
    cp.lesson = lesson;
    for (const auto& e : window) {
      cp.mean_return += e.ret;
      cp.success_rate += e.success ? 1.0 : 0.0;
      cp.collision_rate += e.collided ? 1.0 : 0.0;
    }
    const double k = 1.0 / static_cast<double>(window.size());
    cp.mean_return *= k;
    cp.success_rate *= k;
    cp.collision_rate *= k;
    result.curve.push_back(cp);
    if (hooks.on_log) hooks.on_log(cp);
  };

  std::int64_t lesson_start = 0;
  const auto E = static_cast<std::size_t>(cfg.num_envs);
  for (std::size_t li = 0; li < plan.lessons.size(); ++li) {
    const Lesson& lesson = plan.lessons[li];
    const std::int64_t lesson_end = lesson_start + lesson.budget;
    if (timestep >= lesson_end) {
      lesson_start = lesson_end;
      continue;
    }
    result.lesson = static_cast<int>(li);

    // Map pool for this lesson.
    std::vector<std::shared_ptr<const CaveMap>> pool;
    Scenario base = lesson.scenario;
    if (cfg.reward_mode) base.reward.mode = *cfg.reward_mode;
    EnvConfig ec = env_config_for(base, cfg.env);
    ec.layout = cfg.layout;
    const int pool_size = base.source == "mesh" ? 1 : cfg.maps_per_lesson;
    for (int k = 0; k < pool_size; ++k) {
      Scenario s = base;
      s.seed = mix_seed(seed, 1000 * (li + 1) + static_cast<std::uint64_t>(k)) % 1000000007ull;
      pool.push_back(std::make_shared<const CaveMap>(build_map(s, ec.vehicle.radius)));
    }
    auto fresh = [&](Worker& w) {
      w.env = std::make_unique<Environment>(pool[rng() % pool.size()], ec);
      w.obs = w.env->reset(rng());
      w.ret = 0.0;
      w.collided = false;
    };
    std::vector<Worker> workers(E);
    for (auto& w : workers) fresh(w);

    while (timestep < lesson_end) {
      const auto T = static_cast<std::size_t>(
          std::min<std::int64_t>(cfg.rollout_length, (lesson_end - timestep) / cfg.num_envs));
      const auto N = static_cast<Eigen::Index>(T * E);
      Batch batch;
      batch.obs.resize(static_cast<Eigen::Index>(kObservationSize), N);
      batch.actions.resize(static_cast<std::size_t>(N));
      batch.logp_old.resize(N);
      std::vector<std::vector<double>> rewards(E, std::vector<double>(T)), values(E, std::vector<double>(T + 1));
      std::vector<std::vector<std::uint8_t>> terms(E, std::vector<std::uint8_t>(T));
      MatX obs_mat(static_cast<Eigen::Index>(kObservationSize), static_cast<Eigen::Index>(E));
      std::uniform_real_distribution<double> u01(0.0, 1.0);

      for (std::size_t t = 0; t < T; ++t) {
        for (std::size_t e = 0; e < E; ++e)
          obs_mat.col(static_cast<Eigen::Index>(e)) =
              Eigen::Map<const VecX>(workers[e].obs.data(), static_cast<Eigen::Index>(kObservationSize));
        const auto out = net.forward(obs_mat);
        const MatX logp = log_softmax_columns(out.logits);
        for (std::size_t e = 0; e < E; ++e) {
          const auto col = static_cast<Eigen::Index>(e);
          const double u = u01(rng);
          int a = n_actions - 1;
          double c = 0.0;
          for (int j = 0; j < n_actions; ++j) {
            c += std::exp(logp(j, col));
            if (u < c) {
              a = j;
              break;
            }
          }
          const auto idx = static_cast<Eigen::Index>(e * T + t);
          batch.obs.col(idx) = obs_mat.col(col);
          batch.actions[static_cast<std::size_t>(idx)] = a;
          batch.logp_old(idx) = logp(a, col);
          values[e][t] = out.values(col);

          Worker& w = workers[e];
          const StepResult r = w.env->step(a);
          double reward = r.reward;
          w.ret += r.reward;
          w.collided = w.collided || r.info.collided;
          const bool done = r.terminated || r.truncated;
          if (r.truncated && !r.terminated) reward += cfg.gamma * net.forward(r.observation).values(0);
          rewards[e][t] = reward;
          terms[e][t] = done ? 1 : 0;
          if (done) {
            window.push_back({w.ret, r.info.goal_reached && !w.collided, w.collided});
            while (static_cast<int>(window.size()) > cfg.curve_window) window.pop_front();
            fresh(w);
          } else {
            w.obs = r.observation;
          }
        }
        timestep += static_cast<std::int64_t>(E);
        while (timestep >= next_log) {
          emit_curve(next_log, static_cast<int>(li));
          next_log += cfg.log_interval;
        }
      }
      for (std::size_t e = 0; e < E; ++e)
        obs_mat.col(static_cast<Eigen::Index>(e)) =
            Eigen::Map<const VecX>(workers[e].obs.data(), static_cast<Eigen::Index>(kObservationSize));
      const VecX boot = net.forward(obs_mat).values;
      batch.advantages.resize(N);
      batch.returns.resize(N);
      for (std::size_t e = 0; e < E; ++e) {
        values[e][T] = boot(static_cast<Eigen::Index>(e));
        const GaeResult g = compute_gae(rewards[e], values[e], terms[e], cfg.gamma, cfg.lambda);
        for (std::size_t t = 0; t < T; ++t) {
          batch.advantages(static_cast<Eigen::Index>(e * T + t)) = g.advantages[t];
          batch.returns(static_cast<Eigen::Index>(e * T + t)) = g.returns[t];
        }
      }
      const UpdateStats stats = ppo_update(net, opt, batch, cfg, lesson.clip, lesson.lr, rng);
      if (hooks.on_update) hooks.on_update(timestep, static_cast<int>(li), stats);
      if (next_eval > 0 && timestep >= next_eval) {
        while (next_eval <= timestep) next_eval += hooks.eval_interval;
        if (hooks.on_eval && !hooks.on_eval(timestep, net)) {
          result.timesteps = timestep;
          result.stopped_early = true;
          return result;
        }
      }
    }
    lesson_start = lesson_end;
  }
  result.timesteps = timestep;
  return result;
}

void write_curve_csv(std::ostream& out, const std::vector<CurvePoint>& curve) {
  out << "timestep,mean_return,success_rate,collision_rate,lesson\n";
  char buf[256];
  for (const auto& c : curve) {
    std::snprintf(buf, sizeof buf, "%lld,%.17g,%.17g,%.17g,%d\n", static_cast<long long>(c.timestep), c.mean_return,
                  c.success_rate, c.collision_rate, c.lesson);
    out << buf;
  }
}

// ---------------------------------------------------------------------------

nlohmann::json to_json(const PpoConfig& c) {
  nlohmann::json j = {{"gamma", c.gamma},
                      {"lambda", c.lambda},
                      {"clip", c.clip},
                      {"lr", c.lr},
                      {"rollout_length", c.rollout_length},
                      {"num_envs", c.num_envs},
                      {"minibatch", c.minibatch},
                      {"epochs", c.epochs},
                      {"entropy_coef", c.entropy_coef},
                      {"value_coef", c.value_coef},
                      {"max_grad_norm", c.max_grad_norm},
                      {"hidden", {c.hidden1, c.hidden2}},
                      {"normalize_advantages", c.normalize_advantages},
                      {"layout", to_string(c.layout)},
                      {"maps_per_lesson", c.maps_per_lesson},
                      {"log_interval", c.log_interval},
                      {"curve_window", c.curve_window}};
  if (c.reward_mode) j["reward_mode"] = to_string(*c.reward_mode);
  return j;
}

TrainConfig train_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir) {
  TrainConfig tc;
  try {
    if (!j.is_object()) throw ConfigError("training config must be a JSON object");
    for (const auto& [k, v] : j.items())
      if (k != "ppo" && k != "lessons") throw ConfigError("training config: unknown key '" + k + "'");
    if (j.contains("ppo")) {
      const auto& p = j["ppo"];
      static const std::set<std::string> known = {"gamma", "lambda", "clip", "lr", "rollout_length", "num_envs",
                                                  "minibatch", "epochs", "entropy_coef", "value_coef",
                                                  "max_grad_norm", "hidden", "normalize_advantages", "layout",
                                                  "reward_mode", "maps_per_lesson", "log_interval", "curve_window"};
      for (const auto& [k, v] : p.items())
        if (!known.count(k)) throw ConfigError("training config: unknown ppo key '" + k + "'");
      PpoConfig& c = tc.ppo;
      c.gamma = p.value("gamma", c.gamma);
      c.lambda = p.value("lambda", c.lambda);
      c.clip = p.value("clip", c.clip);
      c.lr = p.value("lr", c.lr);
      c.rollout_length = p.value("rollout_length", c.rollout_length);
      c.num_envs = p.value("num_envs", c.num_envs);
      c.minibatch = p.value("minibatch", c.minibatch);
      c.epochs = p.value("epochs", c.epochs);
      c.entropy_coef = p.value("entropy_coef", c.entropy_coef);
      c.value_coef = p.value("value_coef", c.value_coef);
      c.max_grad_norm = p.value("max_grad_norm", c.max_grad_norm);
      if (p.contains("hidden")) {
        const auto& h = p["hidden"];
        if (!h.is_array() || h.size() != 2) throw ConfigError("ppo.hidden must be [h1, h2]");
        c.hidden1 = h[0].get<int>();
        c.hidden2 = h[1].get<int>();
      }
      c.normalize_advantages = p.value("normalize_advantages", c.normalize_advantages);
      if (p.contains("layout")) c.layout = parse_observation_layout(p["layout"].get<std::string>());
      if (p.contains("reward_mode")) c.reward_mode = parse_reward_mode(p["reward_mode"].get<std::string>());
      c.maps_per_lesson = p.value("maps_per_lesson", c.maps_per_lesson);
      c.log_interval = p.value("log_interval", c.log_interval);
      c.curve_window = p.value("curve_window", c.curve_window);
    }
    if (j.contains("lessons")) {
      if (!j["lessons"].is_array() || j["lessons"].empty())
        throw ConfigError("training config: lessons must be a non-empty array");
      static const std::set<std::string> lesson_keys = {"scenario", "name", "segments", "segment_length",
                                                        "max_steps", "budget", "clip", "lr"};
      for (const auto& l : j["lessons"]) {
        for (const auto& [k, v] : l.items())
          if (!lesson_keys.count(k)) throw ConfigError("training config: unknown lesson key '" + k + "'");
        Lesson lesson;
        const std::string src = l.at("scenario").get<std::string>();
        const bool archetype = src == "train1" || src == "train2" || src == "train3" || src == "test" || src == "surface";
        lesson.scenario = archetype ? archetype_scenario(src, 0) : load_scenario(base_dir / src);
        lesson.name = l.value("name", src);
        lesson.scenario.segments = l.value("segments", lesson.scenario.segments);
        lesson.scenario.segment_length = l.value("segment_length", lesson.scenario.segment_length);
        lesson.scenario.max_steps = l.value("max_steps", lesson.scenario.max_steps);
        if (lesson.scenario.max_steps < 0) throw ConfigError("lesson max_steps must be >= 0");
        lesson.budget = l.at("budget").get<std::int64_t>();
        lesson.clip = l.value("clip", tc.ppo.clip);
        lesson.lr = l.value("lr", tc.ppo.lr);
        tc.plan.lessons.push_back(lesson);
      }
    } else {
      tc.plan = CurriculumPlan::standard();
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("training config: ") + e.what());
  }
  tc.ppo.validate();
  tc.plan.validate(tc.ppo);
  return tc;
}

TrainConfig load_train_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open training config " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("training config " + path.string() + ": " + e.what());
  }
  return train_config_from_json(j, path.parent_path());
}

}  // namespace hydronav
