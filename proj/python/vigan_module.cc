// Python bindings: environments and rendering, demo files, the tabular
// occupancy solver, and the experiment commands (configs travel as JSON).

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstring>
#include <string>
#include <vector>

#include "vigan/common/error.h"
#include "vigan/common/rng.h"
#include "vigan/envs/env.h"
#include "vigan/harness/config.h"
#include "vigan/harness/runner.h"
#include "vigan/oracle/occupancy.h"
#include "vigan/rollout/demos.h"

namespace py = pybind11;
using namespace vigan;

namespace {

py::array_t<double> Vector(const std::vector<double>& v) {
  py::array_t<double> out(static_cast<py::ssize_t>(v.size()));
  std::memcpy(out.mutable_data(), v.data(), v.size() * sizeof(double));
  return out;
}

py::array_t<double> Matrix(const std::vector<double>& v, std::size_t cols) {
  const std::size_t rows = cols == 0 ? 0 : v.size() / cols;
  py::array_t<double> out({static_cast<py::ssize_t>(rows), static_cast<py::ssize_t>(cols)});
  std::memcpy(out.mutable_data(), v.data(), v.size() * sizeof(double));
  return out;
}

py::array_t<std::uint8_t> Image(const envs::Frame& f) {
  py::array_t<std::uint8_t> out({f.height, f.width, f.channels});
  std::memcpy(out.mutable_data(), f.pixels.data(), f.pixels.size());
  return out;
}

std::vector<double> ToVector(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
  return std::vector<double>(a.data(), a.data() + a.size());
}

py::dict SummaryDict(const harness::RunSummary& s) {
  py::dict d;
  d["env"] = s.env;
  d["method"] = s.method;
  d["n_traj"] = s.n_traj;
  d["seed"] = s.seed;
  d["iterations"] = s.iterations;
  d["eval_mean"] = s.eval_mean;
  d["eval_std"] = s.eval_std;
  return d;
}

py::dict DemosDict(const rollout::DemoSet& set) {
  py::dict d;
  d["env_id"] = set.env_id;
  d["modality"] = std::string(rollout::ModalityName(set.modality));
  d["state_dim"] = set.state_dim;
  d["action_dim"] = set.action_dim;
  d["frame_shape"] = py::make_tuple(set.frame_height, set.frame_width, set.frame_channels);
  py::list demos;
  for (const rollout::Demo& demo : set.demos) {
    py::dict one;
    one["states"] = Matrix(demo.states, set.state_dim);
    one["actions"] = Matrix(demo.actions, set.action_dim);
    one["log_probs"] = Vector(demo.log_probs);
    if (!demo.frames.empty()) {
      const auto& f0 = demo.frames.front();
      py::array_t<std::uint8_t> frames(
          {static_cast<py::ssize_t>(demo.frames.size()), static_cast<py::ssize_t>(f0.height),
           static_cast<py::ssize_t>(f0.width), static_cast<py::ssize_t>(f0.channels)});
      std::uint8_t* out = frames.mutable_data();
      for (const auto& f : demo.frames) {
        std::memcpy(out, f.pixels.data(), f.pixels.size());
        out += f.pixels.size();
      }
      one["frames"] = frames;
    }
    demos.append(one);
  }
  d["demos"] = demos;
  return d;
}

class PyEnv {
 public:
  explicit PyEnv(const std::string& name) : env_(envs::MakeEnv(name)) {}

  std::string name() const { return std::string(envs::EnvName(env_->spec().id)); }
  const envs::EnvSpec& spec() const { return env_->spec(); }

  py::array_t<double> Reset(std::uint64_t seed) const {
    Rng rng(seed);
    return Vector(env_->Reset(rng));
  }

  py::tuple Step(const py::array_t<double, py::array::c_style | py::array::forcecast>& state,
                 const py::array_t<double, py::array::c_style | py::array::forcecast>& action,
                 std::uint64_t seed) const {
    Rng rng(seed);
    const envs::StepResult r = env_->Step(ToVector(state), ToVector(action), rng);
    return py::make_tuple(Vector(r.next_state), r.reward, r.terminal);
  }

  py::array_t<std::uint8_t> Render(const py::array_t<double, py::array::c_style | py::array::forcecast>& state,
                                   int width, int height, int channels, const std::string& mode) const {
    envs::RenderMap map;
    map.width = width;
    map.height = height;
    map.channels = channels;
    map.mode = envs::ParseRenderMode(mode);
    return Image(env_->Render(ToVector(state), map));
  }

 private:
  std::unique_ptr<envs::Env> env_;
};

py::dict Occupancy(const py::array_t<double, py::array::c_style | py::array::forcecast>& transitions,
                   const py::array_t<double, py::array::c_style | py::array::forcecast>& initial,
                   const py::array_t<double, py::array::c_style | py::array::forcecast>& policy, double gamma) {
  if (transitions.ndim() != 3 || transitions.shape(0) != transitions.shape(2)) {
    throw ShapeError("transitions must have shape (S, A, S)");
  }
  envs::GridMdp mdp;
  mdp.n_states = static_cast<std::size_t>(transitions.shape(0));
  mdp.n_actions = static_cast<std::size_t>(transitions.shape(1));
  mdp.transitions = ToVector(transitions);
  mdp.rewards.assign(mdp.n_states * mdp.n_actions, 0.0);
  mdp.initial = ToVector(initial);
  mdp.gamma = gamma;
  if (mdp.initial.size() != mdp.n_states) throw ShapeError("initial must have S entries");
  if (policy.size() != static_cast<py::ssize_t>(mdp.n_states * mdp.n_actions)) {
    throw ShapeError("policy must have shape (S, A)");
  }
  mdp.Validate();
  oracle::PolicyTable pi{mdp.n_states, mdp.n_actions, ToVector(policy)};
  const oracle::OccupancyTable t = oracle::Occupancy(mdp, pi);
  py::dict d;
  d["visitation"] = Vector(t.visitation);
  d["rho_sa"] = Matrix(t.rho_sa, t.n_actions);
  d["rho_ss"] = Matrix(t.rho_ss, t.n_states);
  return d;
}

}  // namespace

PYBIND11_MODULE(_vigan, m) {
  m.doc() = "Video imitation: environments, demos and experiment commands";

  auto base = py::register_exception<Error>(m, "Error");
  py::register_exception<ShapeError>(m, "ShapeError", base);
  py::register_exception<ValueError>(m, "ValueError", base);
  py::register_exception<ConfigError>(m, "ConfigError", base);
  py::register_exception<ModalityError>(m, "ModalityError", base);
  py::register_exception<FormatError>(m, "FormatError", base);

  py::class_<PyEnv>(m, "Env")
      .def(py::init<const std::string&>(), py::arg("name"))
      .def_property_readonly("name", &PyEnv::name)
      .def_property_readonly("state_dim", [](const PyEnv& e) { return e.spec().state_dim; })
      .def_property_readonly("horizon", [](const PyEnv& e) { return e.spec().horizon; })
      .def_property_readonly("gamma", [](const PyEnv& e) { return e.spec().gamma; })
      .def_property_readonly("discrete", [](const PyEnv& e) { return e.spec().action_space.discrete; })
      .def_property_readonly("n_actions", [](const PyEnv& e) { return e.spec().action_space.n; })
      .def_property_readonly("action_dim", [](const PyEnv& e) { return e.spec().action_space.dim(); })
      .def("reset", &PyEnv::Reset, py::arg("seed") = 0)
      .def("step", &PyEnv::Step, py::arg("state"), py::arg("action"), py::arg("seed") = 0,
           "Returns (next_state, reward, terminal).")
      .def("render", &PyEnv::Render, py::arg("state"), py::arg("width") = 64, py::arg("height") = 64,
           py::arg("channels") = 3, py::arg("mode") = "injective", "HxWxC uint8 image.");

  m.def("load_demos", [](const std::string& path) { return DemosDict(rollout::LoadDemos(path)); },
        py::arg("path"));
  m.def("occupancy", &Occupancy, py::arg("transitions"), py::arg("initial"), py::arg("policy"),
        py::arg("gamma"), "Discounted occupancy of a tabular policy.");

  m.def("default_config", [] { return harness::ConfigToJson(harness::ExperimentConfig{}); });
  m.def("resolve_config", [](const std::string& json) { return harness::ConfigToJson(harness::ParseConfig(json)); },
        py::arg("json"), "Validates a config and returns it with every field filled in.");

  m.def(
      "train_expert",
      [](const std::string& json) {
        const auto config = harness::ParseConfig(json);
        harness::RunSummary s;
        {
          py::gil_scoped_release release;
          s = harness::TrainExpert(config);
        }
        return SummaryDict(s);
      },
      py::arg("json"));
  m.def(
      "imitate",
      [](const std::string& json) {
        const auto config = harness::ParseConfig(json);
        harness::RunSummary s;
        {
          py::gil_scoped_release release;
          s = harness::Imitate(config);
        }
        return SummaryDict(s);
      },
      py::arg("json"));
  m.def(
      "record_demos", [](const std::string& json) { return DemosDict(harness::RecordDemos(harness::ParseConfig(json))); },
      py::arg("json"));
  m.def(
      "ingest_frames",
      [](const std::string& json) { return DemosDict(harness::IngestFrames(harness::ParseConfig(json))); },
      py::arg("json"));
  m.def(
      "verify_injectivity",
      [](const std::string& json) { return harness::VerifyInjectivity(harness::ParseConfig(json)).json; },
      py::arg("json"), "Returns the injectivity report as JSON text.");
  m.def(
      "evaluate",
      [](const std::string& json) {
        const auto r = harness::Eval(harness::ParseConfig(json));
        py::dict d;
        d["returns"] = r.returns;
        d["mean"] = r.mean;
        d["std"] = r.std;
        return d;
      },
      py::arg("json"));
}
