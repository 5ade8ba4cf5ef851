#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cineflow/config.hpp"
#include "cineflow/metrics.hpp"
#include "cineflow/solver.hpp"

namespace cineflow::app {

enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitData = 2, kExitDivergence = 3 };

int exit_code(ErrorKind kind);

// Artifact names inside the output directory.
namespace files {
inline constexpr const char* kGroundTruth = "gt_rho.cxseq";
inline constexpr const char* kGroundTruthVelocity = "gt_v.cxvel";
inline constexpr const char* kCoils = "coils.cxseq";
inline constexpr const char* kKspaceFull = "kspace_full.cxksp";
inline constexpr const char* kKspace = "kspace.cxksp";
inline constexpr const char* kMask = "mask.cxmask";
inline constexpr const char* kDynamicMask = "dynamic_mask.cxseq";
inline constexpr const char* kSummary = "summary.csv";
inline constexpr const char* kBestParams = "best_params.yaml";

std::string recon(ModelType m);           // recon_<model>.cxseq
std::string recon_velocity(ModelType m);  // recon_<model>_v.cxvel
std::string trace(ModelType m);           // trace_<model>.csv
std::string metrics(ModelType m);         // metrics_<model>.csv
std::string leaderboard(ModelType m);     // leaderboard_<model>.csv
}  // namespace files

struct SimulatedData {
  ImageSequence rho_gt;
  VelocityField v_gt;
  CoilMaps coils;
  SamplingMask mask;
  KSpaceData y_full;
  KSpaceData y;
  SpatialMask dynamic_mask;
};

// Everything cmd_simulate writes, kept in memory.
SimulatedData simulate(const ExperimentConfig& c);

// Model configuration turned into solver inputs.
SolverParams solver_params(const ExperimentConfig& c, const ModelConfig& mc);
Reconstruction run_model(const SimulatedData& data, const ExperimentConfig& c, ModelType m, const ModelConfig& mc);

// YAML sidecar echoing the resolved config.
std::string provenance(const std::string& command, const ExperimentConfig& c,
                       const std::vector<std::pair<std::string, std::string>>& extra = {});

void cmd_simulate(const ExperimentConfig& c);
Reconstruction cmd_reconstruct(const ExperimentConfig& c, ModelType m);

struct EvaluateResult {
  std::map<ModelType, metrics::MetricReport> reports;
  std::vector<std::string> warnings;  // models skipped for lack of a reconstruction
};

// summary.csv body: model,metric,mean,std rows in FW, DT, OF, Cheat-OF order.
std::string summary_csv(const std::map<ModelType, metrics::MetricReport>& reports);

EvaluateResult cmd_evaluate(const ExperimentConfig& c);

struct SweepPoint {
  int index = 0;  // draw order; 0 is the configured default
  ModelConfig params;
  double psnr = 0;
  double ssim = 0;
  bool diverged = false;
};

// Point 0 is the configured default; later points draw alphas and eps
// log-uniformly and sigma uniformly. Only parameters the model uses vary.
std::vector<ModelConfig> sweep_points(const ExperimentConfig& c, ModelType m, int budget);

// Leaderboard sorted by PSNR descending (ties by index).
std::vector<SweepPoint> run_sweep(const SimulatedData& data, const ExperimentConfig& c, ModelType m, int budget);

std::string leaderboard_csv(ModelType m, const std::vector<SweepPoint>& board);

struct SweepResult {
  std::map<ModelType, std::vector<SweepPoint>> boards;
  ExperimentConfig best;  // input config with each swept model's best parameters
};

SweepResult cmd_sweep(const ExperimentConfig& c);

}  // namespace cineflow::app
