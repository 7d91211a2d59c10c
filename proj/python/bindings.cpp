#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <filesystem>
#include <memory>
#include <optional>

#include "hydronav/env.hpp"
#include "hydronav/ppo.hpp"
#include "hydronav/rewards.hpp"
#include "hydronav/scenario.hpp"

namespace py = pybind11;
using namespace hydronav;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

const char* event_name(StepEvent e) {
  switch (e) {
    case StepEvent::goal: return "goal";
    case StepEvent::collision: return "collision";
    case StepEvent::timeout: return "timeout";
    case StepEvent::none: break;
  }
  return "none";
}

StepEvent parse_event(const std::string& s) {
  if (s == "none") return StepEvent::none;
  if (s == "goal") return StepEvent::goal;
  if (s == "collision") return StepEvent::collision;
  if (s == "timeout") return StepEvent::timeout;
  throw ConfigError("unknown step event '" + s + "'");
}

Scenario scenario_arg(const std::string& arg) {
  for (const char* a : {"train1", "train2", "train3", "test", "surface"})
    if (arg == a) return archetype_scenario(arg, 0);
  if (!std::filesystem::exists(arg)) throw ConfigError("no such scenario file or archetype: " + arg);
  return load_scenario(arg);
}

py::array_t<double> to_array(const Observation& o) {
  py::array_t<double> a(static_cast<py::ssize_t>(o.size()));
  std::copy(o.begin(), o.end(), a.mutable_data());
  return a;
}

py::tuple vec3(const Vec3& v) { return py::make_tuple(v.x(), v.y(), v.z()); }

/// One native environment. Closed handles reject every call.
class EnvHandle {
 public:
  EnvHandle(const std::string& scenario, std::uint64_t seed)
      : scenario_(scenario_arg(scenario)), path_(scenario), seed_(seed) {
    env_ = std::make_unique<Environment>(scenario_);
  }

  py::tuple reset(std::optional<std::uint64_t> seed) {
    Environment& e = live();
    if (seed) seed_ = *seed;
    const Observation o = e.reset(seed_);
    py::dict info;
    info["position"] = vec3(e.vehicle().position);
    info["distance_to_goal"] = e.distance_to_goal();
    info["max_steps"] = e.max_steps();
    return py::make_tuple(to_array(o), info);
  }

  py::tuple step(int action) {
    Environment& e = live();
    const StepResult r = e.step(action);
    py::dict info;
    info["collided"] = r.info.collided;
    info["distance_to_goal"] = r.info.distance_to_goal;
    info["clearance"] = r.info.clearance;
    info["position"] = vec3(r.info.position);
    info["goal_reached"] = r.info.goal_reached;
    info["event"] = event_name(r.info.event);
    info["movement"] = r.info.movement;
    info["sensor"] = r.info.sensor;
    info["out_of_domain"] = r.info.out_of_domain;
    info["step"] = e.steps();
    return py::make_tuple(to_array(r.observation), r.reward, r.terminated, r.truncated, info);
  }

  void close() { env_.reset(); }
  bool closed() const { return !env_; }

  int action_count() { return static_cast<int>(live().action_spec().size()); }
  std::vector<std::string> action_names() {
    std::vector<std::string> names;
    for (const auto& a : live().action_spec().actions) names.push_back(a.name);
    return names;
  }
  int max_steps() { return live().max_steps(); }
  int steps() { return live().steps(); }
  bool done() { return live().done(); }
  const std::string& path() const { return path_; }
  std::uint64_t seed() const { return seed_; }

 private:
  Environment& live() {
    if (!env_) throw UsageError("environment handle is closed");
    return *env_;
  }

  Scenario scenario_;
  std::string path_;
  std::uint64_t seed_;
  std::unique_ptr<Environment> env_;
};

}  // namespace

PYBIND11_MODULE(_hydronav, m) {
  m.doc() = "Native aquatic navigation environment";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<ContractViolation>(m, "ContractViolation", base.ptr());
  py::register_exception<DataError>(m, "DataError", base.ptr());
  py::register_exception<NumericalError>(m, "NumericalError", base.ptr());
  py::register_exception<UsageError>(m, "UsageError", PyExc_RuntimeError);

  m.attr("OBSERVATION_SIZE") = kObservationSize;
  m.attr("NUM_RAYS") = kNumRays;

  py::class_<EnvHandle>(m, "EnvHandle")
      .def(py::init<const std::string&, std::uint64_t>(), py::arg("scenario"), py::arg("seed") = 0)
      .def("reset", &EnvHandle::reset, py::arg("seed") = py::none())
      .def("step", &EnvHandle::step, py::arg("action"))
      .def("close", &EnvHandle::close)
      .def_property_readonly("closed", &EnvHandle::closed)
      .def_property_readonly("action_count", &EnvHandle::action_count)
      .def_property_readonly("action_names", &EnvHandle::action_names)
      .def_property_readonly("max_steps", &EnvHandle::max_steps)
      .def_property_readonly("steps", &EnvHandle::steps)
      .def_property_readonly("done", &EnvHandle::done)
      .def_property_readonly("scenario", &EnvHandle::path)
      .def_property_readonly("seed", &EnvHandle::seed);

  m.def("make", [](const std::string& scenario, std::uint64_t seed) { return EnvHandle(scenario, seed); },
        py::arg("scenario"), py::arg("seed") = 0);

  m.def("sparse_reward", [](const std::string& event) { return sparse_reward(parse_event(event)); },
        py::arg("event"));
  m.def("dense_reward",
        [](double d_prev, double d_now, bool collided, bool goal) {
          return dense_reward(d_prev, d_now, collided, goal);
        },
        py::arg("d_prev"), py::arg("d_now"), py::arg("collided") = false, py::arg("goal") = false);
  m.def("movement_reward", [](double d_prev, double d_now) { return movement_reward(d_prev, d_now); },
        py::arg("d_prev"), py::arg("d_now"));
  m.def("sensor_penalty", [](const std::vector<double>& rays) { return sensor_penalty(rays); }, py::arg("rays"));

  m.def(
      "compute_gae",
      [](const std::vector<double>& rewards, const std::vector<double>& values, const std::vector<int>& terminals,
         double gamma, double lam) {
        std::vector<std::uint8_t> t(terminals.begin(), terminals.end());
        GaeResult g = compute_gae(rewards, values, t, gamma, lam);
        return py::make_tuple(py::array_t<double>(static_cast<py::ssize_t>(g.advantages.size()), g.advantages.data()),
                              py::array_t<double>(static_cast<py::ssize_t>(g.returns.size()), g.returns.data()));
      },
      py::arg("rewards"), py::arg("values"), py::arg("terminals"), py::arg("gamma") = 0.99, py::arg("lam") = 0.95);
}
