#include "cineflow/config.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <charconv>
#include <set>

namespace cineflow {

const char* name(GroundTruthSource g) { return g == GroundTruthSource::Simulated ? "simulated" : "dynamic"; }

const char* name(mri::Acceleration a) { return a == mri::Acceleration::Full ? "full" : "4x"; }

std::map<ModelType, ModelConfig> ExperimentConfig::default_models() {
  auto make = [](double a1, double a2, double a3) {
    ModelConfig m;
    m.params.alpha1 = a1;
    m.params.alpha2 = a2;
    m.params.alpha3 = a3;
    return m;
  };
  return {
      {ModelType::FW, make(0.01, 0, 0)},
      {ModelType::DT, make(0.003, 0, 0.02)},
      {ModelType::OF, make(0.003, 0.001, 0.1)},
      {ModelType::CheatOF, make(0.003, 0, 0.1)},
  };
}

void ExperimentConfig::reseed(std::uint64_t s) {
  phantom.seed = s;
  velocity.seed = s + 1;
  coil_seed = s + 2;
  mask_seed = s + 3;
  noise.seed = s + 4;
  sweep.seed = s + 5;
}

const ModelConfig& ExperimentConfig::model(ModelType m) const {
  auto it = models.find(m);
  if (it == models.end()) throw Error(ErrorKind::Usage, std::string("config has no parameters for model ") + name(m));
  return it->second;
}

void ExperimentConfig::validate() const {
  check_sequence_dims(phantom.dims);
  if (substeps < 1) throw Error(ErrorKind::Usage, "advection.substeps must be ≥ 1");
  if (coils < 1) throw Error(ErrorKind::Usage, "coils.count must be ≥ 1");
  if (noise.eta < 0) throw Error(ErrorKind::Usage, "noise.eta must be ≥ 0");
  if (!(dynamic_tau >= 0 && dynamic_tau < 1)) throw Error(ErrorKind::Usage, "dynamic_mask.tau must lie in [0, 1)");
  if (dynamic_dilate_px < 0) throw Error(ErrorKind::Usage, "dynamic_mask.dilate_px must be ≥ 0");
  if (!(ground_truth_boost > 0)) throw Error(ErrorKind::Usage, "ground_truth.boost must be > 0");
  solver.validate();
  for (const auto& [m, mc] : models) {
    mc.params.validate();
    if (mc.sigma < 0) throw Error(ErrorKind::Usage, std::string("models.") + name(m) + ".sigma must be ≥ 0");
  }
  if (sweep.budget < 1) throw Error(ErrorKind::Usage, "sweep.budget must be ≥ 1");
  for (const Range* r : {&sweep.alpha1, &sweep.alpha2, &sweep.alpha3, &sweep.eps1, &sweep.eps2, &sweep.eps3}) {
    if (!(r->lo > 0 && r->hi >= r->lo)) throw Error(ErrorKind::Usage, "sweep ranges for alpha/eps need 0 < lo ≤ hi");
  }
  if (!(sweep.sigma.lo >= 0 && sweep.sigma.hi >= sweep.sigma.lo)) {
    throw Error(ErrorKind::Usage, "sweep sigma range needs 0 ≤ lo ≤ hi");
  }
  for (int f : eval_frames) {
    if (f < 0 || f >= phantom.dims.nt) throw Error(ErrorKind::Usage, "evaluate.frames entry out of range");
  }
  if (profile_row >= phantom.dims.nx) throw Error(ErrorKind::Usage, "evaluate.profile_row out of range");
}

namespace {

void check_keys(const YAML::Node& n, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!n.IsMap()) throw Error(ErrorKind::Usage, "config: '" + where + "' must be a mapping");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& kv : n) {
    const auto key = kv.first.as<std::string>();
    if (!ok.count(key)) throw Error(ErrorKind::Usage, "config: unknown key '" + where + "." + key + "'");
  }
}

template <class T>
void read(const YAML::Node& n, const char* key, T& out, const std::string& where) {
  if (!n[key]) return;
  try {
    out = n[key].as<T>();
  } catch (const YAML::Exception&) {
    throw Error(ErrorKind::Usage, "config: bad value for '" + where + "." + key + "'");
  }
}

void read_range(const YAML::Node& n, const char* key, Range& r, const std::string& where) {
  if (!n[key]) return;
  std::vector<double> v;
  read(n, key, v, where);
  if (v.size() != 2) throw Error(ErrorKind::Usage, "config: '" + where + "." + key + "' must be [lo, hi]");
  r = {v[0], v[1]};
}

ModelConfig read_model(const YAML::Node& n, ModelConfig m, const std::string& where) {
  check_keys(n, where, {"alpha1", "alpha2", "alpha3", "eps1", "eps2", "eps3", "coupling", "sigma"});
  read(n, "alpha1", m.params.alpha1, where);
  read(n, "alpha2", m.params.alpha2, where);
  read(n, "alpha3", m.params.alpha3, where);
  read(n, "eps1", m.params.eps1, where);
  read(n, "eps2", m.params.eps2, where);
  read(n, "eps3", m.params.eps3, where);
  read(n, "sigma", m.sigma, where);
  if (n["coupling"]) {
    std::string s;
    read(n, "coupling", s, where);
    try {
      m.params.coupling = motion::parse_coupling(s);
    } catch (const Error& e) {
      throw Error(ErrorKind::Usage, "config: " + std::string(e.what()));
    }
  }
  return m;
}

// Shortest text that parses back to the same double.
std::string num(double x) {
  char buf[32];
  auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

}  // namespace

ExperimentConfig parse_config(const std::string& yaml_text) {
  YAML::Node root;
  try {
    root = YAML::Load(yaml_text);
  } catch (const YAML::Exception& e) {
    throw Error(ErrorKind::Usage, std::string("config: ") + e.what());
  }
  ExperimentConfig c;
  if (root.IsNull()) return c;
  check_keys(root, "config",
             {"seed", "output_dir", "phantom", "velocity", "advection", "coils", "mask", "noise", "dynamic_mask",
              "ground_truth", "solver", "models", "sweep", "evaluate"});

  if (root["seed"]) {
    std::uint64_t s = 0;
    read(root, "seed", s, "config");
    c.reseed(s);
  }
  if (root["output_dir"]) {
    std::string s;
    read(root, "output_dir", s, "config");
    c.output_dir = s;
  }
  if (auto n = root["phantom"]) {
    check_keys(n, "phantom", {"nt", "nx", "ny", "seed"});
    read(n, "nt", c.phantom.dims.nt, "phantom");
    read(n, "nx", c.phantom.dims.nx, "phantom");
    read(n, "ny", c.phantom.dims.ny, "phantom");
    read(n, "seed", c.phantom.seed, "phantom");
  }
  if (auto n = root["velocity"]) {
    auto& v = c.velocity;
    check_keys(n, "velocity",
               {"pattern", "seed", "amplitude", "max_displacement", "sigma_space", "sigma_time", "imag_fraction",
                "translate_x", "translate_y", "center_x", "center_y", "radius", "follow_chamber"});
    if (n["pattern"]) {
      std::string s;
      read(n, "pattern", s, "velocity");
      v.pattern = sim::parse_pattern(s);
    }
    read(n, "seed", v.seed, "velocity");
    read(n, "amplitude", v.amplitude, "velocity");
    read(n, "max_displacement", v.max_displacement, "velocity");
    read(n, "sigma_space", v.sigma_space, "velocity");
    read(n, "sigma_time", v.sigma_time, "velocity");
    read(n, "imag_fraction", v.imag_fraction, "velocity");
    read(n, "translate_x", v.translate_x, "velocity");
    read(n, "translate_y", v.translate_y, "velocity");
    read(n, "center_x", v.center_x, "velocity");
    read(n, "center_y", v.center_y, "velocity");
    read(n, "radius", v.radius, "velocity");
    read(n, "follow_chamber", c.velocity_follows_chamber, "velocity");
  }
  if (auto n = root["advection"]) {
    check_keys(n, "advection", {"substeps"});
    read(n, "substeps", c.substeps, "advection");
  }
  if (auto n = root["coils"]) {
    check_keys(n, "coils", {"count", "seed"});
    read(n, "count", c.coils, "coils");
    read(n, "seed", c.coil_seed, "coils");
  }
  if (auto n = root["mask"]) {
    check_keys(n, "mask", {"acceleration", "central_fraction", "seed"});
    if (n["acceleration"]) {
      std::string s;
      read(n, "acceleration", s, "mask");
      if (s == "full") c.acceleration = mri::Acceleration::Full;
      else if (s == "4x") c.acceleration = mri::Acceleration::FourX;
      else throw Error(ErrorKind::Usage, "config: mask.acceleration must be 'full' or '4x'");
    }
    read(n, "central_fraction", c.central_fraction, "mask");
    read(n, "seed", c.mask_seed, "mask");
  }
  if (auto n = root["noise"]) {
    check_keys(n, "noise", {"eta", "seed"});
    read(n, "eta", c.noise.eta, "noise");
    read(n, "seed", c.noise.seed, "noise");
  }
  if (auto n = root["dynamic_mask"]) {
    check_keys(n, "dynamic_mask", {"tau", "dilate_px"});
    read(n, "tau", c.dynamic_tau, "dynamic_mask");
    read(n, "dilate_px", c.dynamic_dilate_px, "dynamic_mask");
  }
  if (auto n = root["ground_truth"]) {
    check_keys(n, "ground_truth", {"source", "boost"});
    if (n["source"]) {
      std::string s;
      read(n, "source", s, "ground_truth");
      if (s == "simulated") c.ground_truth = GroundTruthSource::Simulated;
      else if (s == "dynamic") c.ground_truth = GroundTruthSource::Dynamic;
      else throw Error(ErrorKind::Usage, "config: ground_truth.source must be 'simulated' or 'dynamic'");
    }
    read(n, "boost", c.ground_truth_boost, "ground_truth");
  }
  if (auto n = root["solver"]) {
    check_keys(n, "solver", {"sigma", "n_outer", "n_rho", "n_v", "delta", "init"});
    read(n, "sigma", c.solver.sigma, "solver");
    read(n, "n_outer", c.solver.n_outer, "solver");
    read(n, "n_rho", c.solver.n_rho, "solver");
    read(n, "n_v", c.solver.n_v, "solver");
    read(n, "delta", c.solver.delta, "solver");
    if (n["init"]) {
      std::string s;
      read(n, "init", s, "solver");
      if (s == "zero") c.solver.init = SolverParams::Init::Zero;
      else if (s == "adjoint") c.solver.init = SolverParams::Init::Adjoint;
      else throw Error(ErrorKind::Usage, "config: solver.init must be 'zero' or 'adjoint'");
    }
  }
  if (auto n = root["models"]) {
    check_keys(n, "models", {"fw", "dt", "of", "cheat-of"});
    for (const auto& kv : n) {
      const auto key = kv.first.as<std::string>();
      const ModelType m = parse_model(key);
      c.models[m] = read_model(kv.second, c.models[m], "models." + key);
    }
  }
  if (auto n = root["sweep"]) {
    auto& s = c.sweep;
    check_keys(n, "sweep",
               {"budget", "seed", "alpha1", "alpha2", "alpha3", "eps1", "eps2", "eps3", "sigma", "models"});
    read(n, "budget", s.budget, "sweep");
    read(n, "seed", s.seed, "sweep");
    read_range(n, "alpha1", s.alpha1, "sweep");
    read_range(n, "alpha2", s.alpha2, "sweep");
    read_range(n, "alpha3", s.alpha3, "sweep");
    read_range(n, "eps1", s.eps1, "sweep");
    read_range(n, "eps2", s.eps2, "sweep");
    read_range(n, "eps3", s.eps3, "sweep");
    read_range(n, "sigma", s.sigma, "sweep");
    if (n["models"]) {
      std::vector<std::string> names;
      read(n, "models", names, "sweep");
      s.models.clear();
      for (const auto& m : names) s.models.push_back(parse_model(m));
    }
  }
  if (auto n = root["evaluate"]) {
    check_keys(n, "evaluate", {"frames", "profile_row"});
    read(n, "frames", c.eval_frames, "evaluate");
    read(n, "profile_row", c.profile_row, "evaluate");
  }
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const Error& e) {
    throw Error(ErrorKind::Usage, std::string("cannot read config: ") + e.what());
  }
  return parse_config(text);
}

std::string to_yaml(const ExperimentConfig& c) {
  YAML::Emitter e;
  auto range = [&](const char* key, const Range& r) {
    e << YAML::Key << key << YAML::Value << YAML::Flow << YAML::BeginSeq << num(r.lo) << num(r.hi) << YAML::EndSeq;
  };
  e << YAML::BeginMap;
  e << YAML::Key << "output_dir" << YAML::Value << c.output_dir.string();

  e << YAML::Key << "phantom" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "nt" << YAML::Value << c.phantom.dims.nt;
  e << YAML::Key << "nx" << YAML::Value << c.phantom.dims.nx;
  e << YAML::Key << "ny" << YAML::Value << c.phantom.dims.ny;
  e << YAML::Key << "seed" << YAML::Value << c.phantom.seed;
  e << YAML::EndMap;

  const auto& v = c.velocity;
  e << YAML::Key << "velocity" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "pattern" << YAML::Value << sim::name(v.pattern);
  e << YAML::Key << "seed" << YAML::Value << v.seed;
  e << YAML::Key << "amplitude" << YAML::Value << num(v.amplitude);
  e << YAML::Key << "max_displacement" << YAML::Value << num(v.max_displacement);
  e << YAML::Key << "sigma_space" << YAML::Value << num(v.sigma_space);
  e << YAML::Key << "sigma_time" << YAML::Value << num(v.sigma_time);
  e << YAML::Key << "imag_fraction" << YAML::Value << num(v.imag_fraction);
  e << YAML::Key << "translate_x" << YAML::Value << num(v.translate_x);
  e << YAML::Key << "translate_y" << YAML::Value << num(v.translate_y);
  e << YAML::Key << "center_x" << YAML::Value << num(v.center_x);
  e << YAML::Key << "center_y" << YAML::Value << num(v.center_y);
  e << YAML::Key << "radius" << YAML::Value << num(v.radius);
  e << YAML::Key << "follow_chamber" << YAML::Value << c.velocity_follows_chamber;
  e << YAML::EndMap;

  e << YAML::Key << "advection" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "substeps" << YAML::Value << c.substeps << YAML::EndMap;

  e << YAML::Key << "coils" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "count" << YAML::Value << c.coils;
  e << YAML::Key << "seed" << YAML::Value << c.coil_seed << YAML::EndMap;

  e << YAML::Key << "mask" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "acceleration" << YAML::Value << name(c.acceleration);
  e << YAML::Key << "central_fraction" << YAML::Value << num(c.central_fraction);
  e << YAML::Key << "seed" << YAML::Value << c.mask_seed << YAML::EndMap;

  e << YAML::Key << "noise" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "eta" << YAML::Value << num(c.noise.eta);
  e << YAML::Key << "seed" << YAML::Value << c.noise.seed << YAML::EndMap;

  e << YAML::Key << "dynamic_mask" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "tau" << YAML::Value << num(c.dynamic_tau);
  e << YAML::Key << "dilate_px" << YAML::Value << c.dynamic_dilate_px << YAML::EndMap;

  e << YAML::Key << "ground_truth" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "source" << YAML::Value << name(c.ground_truth);
  e << YAML::Key << "boost" << YAML::Value << num(c.ground_truth_boost) << YAML::EndMap;

  e << YAML::Key << "solver" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "sigma" << YAML::Value << num(c.solver.sigma);
  e << YAML::Key << "n_outer" << YAML::Value << c.solver.n_outer;
  e << YAML::Key << "n_rho" << YAML::Value << c.solver.n_rho;
  e << YAML::Key << "n_v" << YAML::Value << c.solver.n_v;
  e << YAML::Key << "delta" << YAML::Value << num(c.solver.delta);
  e << YAML::Key << "init" << YAML::Value << (c.solver.init == SolverParams::Init::Zero ? "zero" : "adjoint");
  e << YAML::EndMap;

  e << YAML::Key << "models" << YAML::Value << YAML::BeginMap;
  for (const auto& [m, mc] : c.models) {
    e << YAML::Key << name(m) << YAML::Value << YAML::BeginMap;
    e << YAML::Key << "alpha1" << YAML::Value << num(mc.params.alpha1);
    e << YAML::Key << "alpha2" << YAML::Value << num(mc.params.alpha2);
    e << YAML::Key << "alpha3" << YAML::Value << num(mc.params.alpha3);
    e << YAML::Key << "eps1" << YAML::Value << num(mc.params.eps1);
    e << YAML::Key << "eps2" << YAML::Value << num(mc.params.eps2);
    e << YAML::Key << "eps3" << YAML::Value << num(mc.params.eps3);
    e << YAML::Key << "coupling" << YAML::Value << motion::name(mc.params.coupling);
    e << YAML::Key << "sigma" << YAML::Value << num(mc.sigma);
    e << YAML::EndMap;
  }
  e << YAML::EndMap;

  const auto& s = c.sweep;
  e << YAML::Key << "sweep" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "budget" << YAML::Value << s.budget;
  e << YAML::Key << "seed" << YAML::Value << s.seed;
  range("alpha1", s.alpha1);
  range("alpha2", s.alpha2);
  range("alpha3", s.alpha3);
  range("eps1", s.eps1);
  range("eps2", s.eps2);
  range("eps3", s.eps3);
  range("sigma", s.sigma);
  e << YAML::Key << "models" << YAML::Value << YAML::Flow << YAML::BeginSeq;
  for (auto m : s.models) e << name(m);
  e << YAML::EndSeq << YAML::EndMap;

  e << YAML::Key << "evaluate" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "frames" << YAML::Value << YAML::Flow << c.eval_frames;
  e << YAML::Key << "profile_row" << YAML::Value << c.profile_row << YAML::EndMap;

  e << YAML::EndMap;
  return std::string(e.c_str()) + "\n";
}

}  // namespace cineflow
