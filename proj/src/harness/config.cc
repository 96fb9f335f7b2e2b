#include "vigan/harness/config.h"

#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "json.hpp"
#include "vigan/common/error.h"
#include "vigan/envs/env.h"

namespace vigan::harness {
namespace {

using Json = nlohmann::ordered_json;

static_assert(std::is_same_v<std::size_t, std::uint64_t>, "size fields are read as u64");

constexpr MethodId kAllMethods[] = {MethodId::kExpertTrpo, MethodId::kBc,    MethodId::kGail,
                                    MethodId::kSigan,      MethodId::kVigan, MethodId::kPixel,
                                    MethodId::kTcn};

// Reads fields out of a JSON object, remembering which keys were consumed so
// that leftovers can be reported as unknown.
class Reader {
 public:
  Reader(const Json& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) throw ConfigError(Where() + "expected an object");
  }

  void Field(const char* name, std::string& out) {
    if (const Json* v = Take(name)) {
      if (!v->is_string()) throw ConfigError(Path(name) + ": expected a string");
      out = v->get<std::string>();
    }
  }
  void Field(const char* name, bool& out) {
    if (const Json* v = Take(name)) {
      if (!v->is_boolean()) throw ConfigError(Path(name) + ": expected true or false");
      out = v->get<bool>();
    }
  }
  void Field(const char* name, int& out) {
    if (const Json* v = Take(name)) {
      if (!v->is_number_integer()) throw ConfigError(Path(name) + ": expected an integer");
      const auto x = v->get<std::int64_t>();
      if (x < INT32_MIN || x > INT32_MAX) throw ConfigError(Path(name) + ": integer out of range");
      out = static_cast<int>(x);
    }
  }
  void Field(const char* name, std::uint64_t& out) {
    if (const Json* v = Take(name)) {
      if (!v->is_number_unsigned()) throw ConfigError(Path(name) + ": expected a non-negative integer");
      out = v->get<std::uint64_t>();
    }
  }
  void Field(const char* name, double& out) {
    if (const Json* v = Take(name)) {
      if (!v->is_number()) throw ConfigError(Path(name) + ": expected a number");
      out = v->get<double>();
    }
  }
  void Object(const char* name, const std::function<void(Reader&)>& body) {
    if (const Json* v = Take(name)) {
      Reader sub(*v, Path(name));
      body(sub);
      sub.Finish();
    }
  }

  void Finish() const {
    for (auto it = node_.begin(); it != node_.end(); ++it) {
      if (!seen_.count(it.key())) throw ConfigError("unknown field '" + Path(it.key()) + "'");
    }
  }

 private:
  const Json* Take(const std::string& name) {
    seen_.insert(name);
    auto it = node_.find(name);
    return it == node_.end() ? nullptr : &*it;
  }
  std::string Path(const std::string& name) const { return path_.empty() ? name : path_ + "." + name; }
  std::string Where() const { return path_.empty() ? "config: " : path_ + ": "; }

  const Json& node_;
  std::string path_;
  std::set<std::string> seen_;
};

class Writer {
 public:
  explicit Writer(Json& node) : node_(node) {}

  template <typename T>
  void Field(const char* name, T& value) {
    node_[name] = value;
  }
  void Object(const char* name, const std::function<void(Writer&)>& body) {
    Json sub = Json::object();
    Writer w(sub);
    body(w);
    node_[name] = std::move(sub);
  }

 private:
  Json& node_;
};

// The single list of config fields, shared by parsing and serialization.
template <typename B>
void Bind(B& b, ExperimentConfig& c) {
  b.Field("env", c.env);
  b.Field("method", c.method);
  b.Field("seed", c.seed);
  b.Field("iterations", c.iterations);
  b.Field("horizon", c.horizon);
  b.Field("demos", c.demos);
  b.Field("checkpoint", c.checkpoint);
  b.Field("output_dir", c.output_dir);
  b.Field("eval_every", c.eval_every);
  b.Field("eval_episodes", c.eval_episodes);
  b.Field("n_traj", c.n_traj);
  b.Field("modality", c.modality);
  b.Field("demo_deterministic", c.demo_deterministic);
  b.Field("export_frames", c.export_frames);
  b.Field("policy_pairs", c.policy_pairs);
  b.Object("render", [&c](B& r) {
    r.Field("width", c.render.width);
    r.Field("height", c.render.height);
    r.Field("channels", c.render.channels);
    r.Field("mode", c.render.mode);
    r.Field("crop_shake_max", c.render.crop_shake_max);
    r.Field("k_frames", c.render.k_frames);
    r.Field("occluder_x0", c.render.occluder_x0);
    r.Field("occluder_y0", c.render.occluder_y0);
    r.Field("occluder_x1", c.render.occluder_x1);
    r.Field("occluder_y1", c.render.occluder_y1);
  });
  b.Object("rollout", [&c](B& r) {
    r.Field("steps_per_iter", c.rollout.steps_per_iter);
    r.Field("workers", c.rollout.workers);
    r.Field("gae_lambda", c.rollout.gae_lambda);
  });
  b.Object("trpo", [&c](B& t) {
    t.Field("max_kl", c.trpo.max_kl);
    t.Field("cg_iters", c.trpo.cg_iters);
    t.Field("cg_damping", c.trpo.cg_damping);
    t.Field("line_search_backtracks", c.trpo.line_search_backtracks);
    t.Field("line_search_accept_ratio", c.trpo.line_search_accept_ratio);
    t.Field("value_fit_epochs", c.trpo.value_fit_epochs);
    t.Field("value_learning_rate", c.trpo.value_learning_rate);
    t.Field("value_minibatch", c.trpo.value_minibatch);
    t.Field("entropy_coef", c.trpo.entropy_coef);
  });
  b.Object("adversarial", [&c](B& a) {
    a.Field("disc_steps_per_iter", c.adversarial.disc_steps_per_iter);
    a.Field("disc_batch_size", c.adversarial.disc_batch_size);
    a.Field("disc_learning_rate", c.adversarial.disc_learning_rate);
    a.Field("reward_clamp_eps", c.adversarial.reward_clamp_eps);
  });
  b.Object("bc", [&c](B& x) {
    x.Field("epochs", c.bc.epochs);
    x.Field("learning_rate", c.bc.learning_rate);
  });
  b.Object("tcn", [&c](B& t) {
    t.Field("epochs", c.tcn.epochs);
    t.Field("batch_size", c.tcn.batch_size);
    t.Field("learning_rate", c.tcn.learning_rate);
    t.Field("pos_window", c.tcn.pos_window);
    t.Field("neg_window", c.tcn.neg_window);
    t.Field("margin", c.tcn.margin);
    t.Field("include_agent_frames", c.tcn.include_agent_frames);
    t.Field("agent_steps_per_iter", c.tcn.agent_steps_per_iter);
  });
  b.Object("ingest", [&c](B& i) {
    i.Field("frames_dir", c.ingest.frames_dir);
    i.Field("crop_x", c.ingest.crop_x);
    i.Field("crop_y", c.ingest.crop_y);
    i.Field("crop_width", c.ingest.crop_width);
    i.Field("crop_height", c.ingest.crop_height);
  });
}

Json ToJsonTree(const ExperimentConfig& config) {
  ExperimentConfig copy = config;
  Json root = Json::object();
  Writer w(root);
  Bind(w, copy);
  return root;
}

ExperimentConfig FromJsonTree(const Json& root) {
  ExperimentConfig config;
  Reader r(root, "");
  Bind(r, config);
  r.Finish();
  config.Validate();
  return config;
}

// Runs `check` and prefixes any library error with the field group.
void Within(const std::string& group, const std::function<void()>& check) {
  try {
    check();
  } catch (const Error& e) {
    throw ConfigError(group + ": " + e.what());
  }
}

void Require(bool ok, const std::string& message) {
  if (!ok) throw ConfigError(message);
}

}  // namespace

std::string_view MethodIdName(MethodId method) {
  switch (method) {
    case MethodId::kExpertTrpo:
      return "expert_trpo";
    case MethodId::kBc:
      return "bc";
    case MethodId::kGail:
      return "gail";
    case MethodId::kSigan:
      return "sigan";
    case MethodId::kVigan:
      return "vigan";
    case MethodId::kPixel:
      return "pixel";
    case MethodId::kTcn:
      return "tcn";
  }
  return "unknown";
}

MethodId ParseMethodId(std::string_view name) {
  for (MethodId m : kAllMethods) {
    if (MethodIdName(m) == name) return m;
  }
  throw ConfigError("method: unknown method '" + std::string(name) + "'");
}

bool IsVideoMethod(MethodId method) {
  return method == MethodId::kVigan || method == MethodId::kPixel || method == MethodId::kTcn;
}

void CheckMethodModality(MethodId method, rollout::Modality modality) {
  using rollout::Modality;
  bool ok = false;
  switch (method) {
    case MethodId::kExpertTrpo:
      ok = true;
      break;
    case MethodId::kBc:
    case MethodId::kGail:
      ok = modality == Modality::kStateAction;
      break;
    case MethodId::kSigan:
      ok = modality != Modality::kFrames;
      break;
    case MethodId::kVigan:
    case MethodId::kPixel:
    case MethodId::kTcn:
      ok = modality == Modality::kFrames;
      break;
  }
  if (!ok) {
    throw ModalityError("method " + std::string(MethodIdName(method)) + " cannot learn from " +
                        std::string(rollout::ModalityName(modality)) + " demos");
  }
}

envs::RenderMap RenderSettings::ToMap() const {
  envs::RenderMap map;
  map.width = width;
  map.height = height;
  map.channels = channels;
  map.mode = envs::ParseRenderMode(mode);
  map.crop_shake_max = crop_shake_max;
  map.occluder_x0 = occluder_x0;
  map.occluder_y0 = occluder_y0;
  map.occluder_x1 = occluder_x1;
  map.occluder_y1 = occluder_y1;
  return map;
}

adversarial::AdversarialConfig ExperimentConfig::AdversarialFor(adversarial::Method m) const {
  adversarial::AdversarialConfig out = adversarial;
  out.method = m;
  out.k_frames = render.k_frames;
  return out;
}

baselines::TripletSampler ExperimentConfig::Sampler() const {
  return {tcn.pos_window, tcn.neg_window, tcn.margin};
}

baselines::TcnOptions ExperimentConfig::TcnOpts() const {
  baselines::TcnOptions o;
  o.epochs = tcn.epochs;
  o.batch_size = tcn.batch_size;
  o.learning_rate = tcn.learning_rate;
  o.include_agent_frames = tcn.include_agent_frames;
  o.agent_steps_per_iter = tcn.agent_steps_per_iter;
  return o;
}

void ExperimentConfig::Validate() const {
  Within("env", [&] { envs::ParseEnvId(env); });
  ParseMethodId(method);
  Require(iterations >= 0, "iterations: must be non-negative");
  Require(horizon >= 0, "horizon: must be non-negative");
  Require(eval_every >= 1, "eval_every: must be at least 1");
  Require(eval_episodes >= 1, "eval_episodes: must be at least 1");
  Require(n_traj >= 1, "n_traj: must be at least 1");
  Within("modality", [&] { rollout::ParseModality(modality); });
  Require(!export_frames || modality == "frames", "export_frames: requires frames modality");
  Require(policy_pairs >= 1, "policy_pairs: must be at least 1");
  Require(!output_dir.empty(), "output_dir: must not be empty");

  Within("render", [&] { render.ToMap().Validate(); });
  Require(render.k_frames == 2 || render.k_frames == 3, "render.k_frames: must be 2 or 3");

  Require(rollout.steps_per_iter >= 1, "rollout.steps_per_iter: must be at least 1");
  Require(rollout.workers >= 1, "rollout.workers: must be at least 1");
  Require(rollout.gae_lambda >= 0.0 && rollout.gae_lambda <= 1.0, "rollout.gae_lambda: must be in [0, 1]");

  trpo.Validate();
  Within("adversarial", [&] { AdversarialFor(adversarial::Method::kVigan).Validate(); });

  Require(bc.epochs >= 0, "bc.epochs: must be non-negative");
  Require(bc.learning_rate > 0.0, "bc.learning_rate: must be positive");

  Within("tcn", [&] { Sampler().Validate(); });
  Require(tcn.epochs >= 0, "tcn.epochs: must be non-negative");
  Require(tcn.batch_size >= 1, "tcn.batch_size: must be at least 1");
  Require(tcn.learning_rate > 0.0, "tcn.learning_rate: must be positive");
  Require(tcn.agent_steps_per_iter >= 0, "tcn.agent_steps_per_iter: must be non-negative");

  Require(ingest.crop_x >= 0 && ingest.crop_y >= 0 && ingest.crop_width >= 0 && ingest.crop_height >= 0,
          "ingest: crop fields must be non-negative");
}

ExperimentConfig ParseConfig(std::string_view json_text) {
  Json root;
  try {
    root = Json::parse(json_text);
  } catch (const Json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return FromJsonTree(root);
}

ExperimentConfig LoadConfig(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return ParseConfig(buf.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

std::string ConfigToJson(const ExperimentConfig& config) {
  return ToJsonTree(config).dump(2) + "\n";
}

void SetField(ExperimentConfig& config, const std::string& path, const std::string& value) {
  Json root = ToJsonTree(config);
  Json* node = &root;
  std::size_t begin = 0;
  while (true) {
    const std::size_t dot = path.find('.', begin);
    const std::string key = path.substr(begin, dot == std::string::npos ? std::string::npos : dot - begin);
    if (!node->is_object() || !node->contains(key)) throw ConfigError("unknown field '" + path + "'");
    node = &(*node)[key];
    if (dot == std::string::npos) break;
    begin = dot + 1;
  }
  if (node->is_object()) throw ConfigError(path + ": is a group, not a field");
  Json parsed = Json::parse(value, nullptr, false);
  *node = parsed.is_discarded() || node->is_string() ? Json(value) : parsed;
  config = FromJsonTree(root);
}

}  // namespace vigan::harness
