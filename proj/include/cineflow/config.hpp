#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "cineflow/mri_op.hpp"
#include "cineflow/objective.hpp"
#include "cineflow/simdata.hpp"
#include "cineflow/solver.hpp"

namespace cineflow {

// Per-model hyperparameters; sigma overrides SolverParams::sigma.
struct ModelConfig {
  ModelParams params;
  double sigma = 0;
  bool operator==(const ModelConfig&) const = default;
};

struct Range {
  double lo = 0;
  double hi = 0;
  bool operator==(const Range&) const = default;
};

struct SweepConfig {
  int budget = 20;
  std::uint64_t seed = 6;
  // alphas and eps are drawn log-uniformly, sigma uniformly
  Range alpha1{1e-3, 3e-2};
  Range alpha2{1e-4, 1e-2};
  Range alpha3{1e-2, 1.0};
  Range eps1{3e-3, 3e-2};
  Range eps2{3e-3, 3e-2};
  Range eps3{3e-3, 3e-2};
  Range sigma{0.0, 2.0};
  std::vector<ModelType> models{ModelType::FW, ModelType::DT, ModelType::OF, ModelType::CheatOF};
  bool operator==(const SweepConfig&) const = default;
};

enum class GroundTruthSource { Simulated, Dynamic };

struct ExperimentConfig {
  std::filesystem::path output_dir = "out";

  sim::PhantomSpec phantom;
  sim::VelocitySpec velocity;
  bool velocity_follows_chamber = true;  // contraction centered on the phantom chamber
  int substeps = 4;

  int coils = 8;
  std::uint64_t coil_seed = 3;

  mri::Acceleration acceleration = mri::Acceleration::FourX;
  double central_fraction = 0.15;
  std::uint64_t mask_seed = 4;

  sim::NoiseSpec noise;

  double dynamic_tau = 0.2;
  int dynamic_dilate_px = 3;

  GroundTruthSource ground_truth = GroundTruthSource::Simulated;
  double ground_truth_boost = 10.0;

  SolverParams solver;
  std::map<ModelType, ModelConfig> models = default_models();

  SweepConfig sweep;

  std::vector<int> eval_frames{0, 4};
  int profile_row = -1;  // negative: the row through the chamber center

  // Sets every seed from one base value: phantom s, velocity s+1, coils s+2,
  // mask s+3, noise s+4, sweep s+5.
  void reseed(std::uint64_t s);
  void validate() const;
  const ModelConfig& model(ModelType m) const;

  static std::map<ModelType, ModelConfig> default_models();
  bool operator==(const ExperimentConfig&) const = default;
};

ExperimentConfig parse_config(const std::string& yaml_text);
ExperimentConfig load_config(const std::filesystem::path& path);
std::string to_yaml(const ExperimentConfig& c);

const char* name(GroundTruthSource g);
const char* name(mri::Acceleration a);

}  // namespace cineflow
