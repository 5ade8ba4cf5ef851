#include "cineflow/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "cineflow/figures.hpp"
#include "cineflow/simdata.hpp"

namespace cineflow::app {

namespace fs = std::filesystem;

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Usage: return kExitUsage;
    case ErrorKind::Divergence: return kExitDivergence;
    default: return kExitData;
  }
}

namespace files {
std::string recon(ModelType m) { return std::string("recon_") + name(m) + ".cxseq"; }
std::string recon_velocity(ModelType m) { return std::string("recon_") + name(m) + "_v.cxvel"; }
std::string trace(ModelType m) { return std::string("trace_") + name(m) + ".csv"; }
std::string metrics(ModelType m) { return std::string("metrics_") + name(m) + ".csv"; }
std::string leaderboard(ModelType m) { return std::string("leaderboard_") + name(m) + ".csv"; }
}  // namespace files

namespace {

constexpr std::array<ModelType, 4> kModelOrder{ModelType::FW, ModelType::DT, ModelType::OF, ModelType::CheatOF};
constexpr int kZoom = 4;

const char* display_name(ModelType m) {
  switch (m) {
    case ModelType::FW: return "FW";
    case ModelType::DT: return "DT";
    case ModelType::OF: return "OF";
    case ModelType::CheatOF: return "Cheat-OF";
  }
  return "?";
}

KSpaceData subsample(const KSpaceData& full, const SamplingMask& mask) {
  const Dims d = full.dims();
  KSpaceData out(d, full.coils(), mask);
  for (int t = 0; t < d.nt; ++t) {
    for (int c = 0; c < full.coils(); ++c) {
      for (int x : mask.rows(t)) {
        for (int y = 0; y < d.ny; ++y) out(t, c, x, y) = full(t, c, x, y);
      }
    }
  }
  return out;
}

fs::path out_path(const ExperimentConfig& c, const std::string& file) { return c.output_dir / file; }

void require_file(const fs::path& p, const std::string& what) {
  if (!fs::exists(p)) throw Error(ErrorKind::Io, "missing " + what + ": " + p.string());
}

int profile_row(const ExperimentConfig& c) {
  if (c.profile_row >= 0) return c.profile_row;
  const auto [cx, cy] = sim::chamber_center(c.phantom);
  (void)cy;
  return std::clamp(static_cast<int>(std::lround(cx)), 0, c.phantom.dims.nx - 1);
}

}  // namespace

SimulatedData simulate(const ExperimentConfig& c) {
  c.validate();
  const Dims d = c.phantom.dims;
  sim::VelocitySpec vs = c.velocity;
  if (c.velocity_follows_chamber) {
    const auto [cx, cy] = sim::chamber_center(c.phantom);
    vs.center_x = cx;
    vs.center_y = cy;
    vs.radius = sim::chamber_radius(c.phantom);
  }
  const auto frame0 = sim::make_phantom_frame0(c.phantom);
  VelocityField v = sim::make_velocity_field(d, vs);
  ImageSequence rho = sim::advect(frame0, v, c.substeps);

  CoilMaps coils = sim::make_coil_maps(c.coils, d.nx, d.ny, c.coil_seed);
  SamplingMask mask = mri::make_mask(d.nt, d.nx, c.acceleration, c.central_fraction, c.mask_seed);
  const mri::MriSystem full_sys(coils, SamplingMask::full(d.nt, d.nx));
  KSpaceData y_full = sim::synthesize_measurements(rho, full_sys, c.noise);
  KSpaceData y = subsample(y_full, mask);

  if (c.ground_truth == GroundTruthSource::Dynamic) {
    const auto& mc = c.model(ModelType::OF);
    auto [rho_gt, v_gt] =
        sim::dynamic_ground_truth(y_full, full_sys, mc.params, solver_params(c, mc), c.ground_truth_boost);
    rho = std::move(rho_gt);
    v = std::move(v_gt);
  }
  SpatialMask dyn = sim::dynamic_mask(rho, c.dynamic_tau, c.dynamic_dilate_px);
  return {std::move(rho), std::move(v), std::move(coils), std::move(mask), std::move(y_full), std::move(y),
          std::move(dyn)};
}

SolverParams solver_params(const ExperimentConfig& c, const ModelConfig& mc) {
  SolverParams sp = c.solver;
  sp.sigma = mc.sigma;
  return sp;
}

Reconstruction run_model(const SimulatedData& data, const ExperimentConfig& c, ModelType m, const ModelConfig& mc) {
  const mri::MriSystem sys(data.coils, data.mask);
  ModelKind kind{m, std::nullopt};
  if (m == ModelType::CheatOF) kind.v_gt = data.v_gt;
  return reconstruct(data.y, sys, kind, mc.params, solver_params(c, mc));
}

std::string provenance(const std::string& command, const ExperimentConfig& c,
                       const std::vector<std::pair<std::string, std::string>>& extra) {
  std::string out = "command: " + command + "\n";
  out += "version: " CINEFLOW_VERSION "\n";
  for (const auto& [k, v] : extra) out += k + ": " + v + "\n";
  out += "config:\n";
  const std::string body = to_yaml(c);
  std::size_t start = 0;
  while (start < body.size()) {
    const auto end = body.find('\n', start);
    const auto line = body.substr(start, end == std::string::npos ? std::string::npos : end - start);
    if (!line.empty()) out += "  " + line + "\n";
    if (end == std::string::npos) break;
    start = end + 1;
  }
  return out;
}

void cmd_simulate(const ExperimentConfig& c) {
  const auto data = simulate(c);
  fs::create_directories(c.output_dir);
  save_sequence(data.rho_gt, out_path(c, files::kGroundTruth));
  save_velocity(data.v_gt, out_path(c, files::kGroundTruthVelocity));
  save_coils(data.coils, out_path(c, files::kCoils));
  save_kspace(data.y_full, out_path(c, files::kKspaceFull));
  save_kspace(data.y, out_path(c, files::kKspace));
  save_mask(data.mask, out_path(c, files::kMask));
  save_spatial_mask(data.dynamic_mask, out_path(c, files::kDynamicMask));
  write_file_atomic(out_path(c, "provenance_simulate.yaml"),
                    provenance("simulate", c,
                               {{"dynamic_mask_pixels", std::to_string(data.dynamic_mask.count())}}));
}

Reconstruction cmd_reconstruct(const ExperimentConfig& c, ModelType m) {
  c.validate();
  const auto ksp_path = out_path(c, files::kKspace);
  const auto coil_path = out_path(c, files::kCoils);
  require_file(ksp_path, "undersampled k-space (run simulate first)");
  require_file(coil_path, "coil maps (run simulate first)");
  SimulatedData data;
  data.y = load_kspace(ksp_path);
  data.coils = load_coils(coil_path);
  data.mask = data.y.mask();
  if (m == ModelType::CheatOF) {
    const auto vp = out_path(c, files::kGroundTruthVelocity);
    require_file(vp, "ground-truth velocities required by cheat-of");
    data.v_gt = load_velocity(vp);
  }
  const auto& mc = c.model(m);
  auto rec = run_model(data, c, m, mc);
  save_sequence(rec.rho, out_path(c, files::recon(m)));
  if (m == ModelType::OF) save_velocity(rec.v, out_path(c, files::recon_velocity(m)));
  write_trace_csv(rec.trace, out_path(c, files::trace(m)));
  write_file_atomic(out_path(c, std::string("provenance_reconstruct_") + name(m) + ".yaml"),
                    provenance("reconstruct", c,
                               {{"model", name(m)},
                                {"converged", rec.converged ? "true" : "false"},
                                {"trace_rows", std::to_string(rec.trace.size())}}));
  return rec;
}

std::string summary_csv(const std::map<ModelType, metrics::MetricReport>& reports) {
  std::string out = "model,metric,mean,std\r\n";
  for (ModelType m : kModelOrder) {
    auto it = reports.find(m);
    if (it == reports.end()) continue;
    const auto& r = it->second;
    out += std::string(display_name(m)) + ",PSNR," + metrics::format_number(r.mean_psnr) + "," +
           metrics::format_number(r.std_psnr) + "\r\n";
    out += std::string(display_name(m)) + ",SSIM," + metrics::format_number(r.mean_ssim) + "," +
           metrics::format_number(r.std_ssim) + "\r\n";
  }
  return out;
}

EvaluateResult cmd_evaluate(const ExperimentConfig& c) {
  c.validate();
  const auto gt_path = out_path(c, files::kGroundTruth);
  const auto mask_path = out_path(c, files::kDynamicMask);
  require_file(gt_path, "ground truth (run simulate first)");
  require_file(mask_path, "dynamic mask (run simulate first)");
  const auto gt = load_sequence(gt_path);
  const auto mask = load_spatial_mask(mask_path);
  const Dims d = gt.dims();
  for (int f : c.eval_frames) {
    if (f >= d.nt) throw Error(ErrorKind::Usage, "evaluate.frames entry exceeds the sequence length");
  }

  EvaluateResult res;
  std::map<ModelType, ImageSequence> recs;
  for (ModelType m : kModelOrder) {
    const auto p = out_path(c, files::recon(m));
    if (!fs::exists(p)) {
      res.warnings.push_back(std::string("no reconstruction for ") + name(m) + ", skipped");
      continue;
    }
    auto rec = load_sequence(p);
    require_same_dims(d, rec.dims(), (std::string("reconstruction ") + name(m)).c_str());
    res.reports[m] = metrics::evaluate(gt, rec, mask);
    metrics::write_metrics_csv(res.reports[m], out_path(c, files::metrics(m)));
    recs.emplace(m, std::move(rec));
  }
  if (recs.empty()) throw Error(ErrorKind::Io, "no reconstructions found in " + c.output_dir.string());
  write_file_atomic(out_path(c, files::kSummary), summary_csv(res.reports));

  // One signed scale for every difference image so models compare directly.
  double diff_scale = 0;
  for (const auto& [m, rec] : recs) {
    for (int f : c.eval_frames) {
      auto g = gt.frame(f);
      auto r = rec.frame(f);
      for (std::size_t p = 0; p < g.size(); ++p) {
        if (mask.inside[p]) diff_scale = std::max(diff_scale, std::abs(std::abs(r[p]) - std::abs(g[p])));
      }
    }
  }
  double vmax_img = 0;
  for (const auto& z : gt.values()) vmax_img = std::max(vmax_img, std::abs(z));
  const int row = profile_row(c);
  figures::write_png(figures::upscale(figures::time_space_profile(gt, row, vmax_img), kZoom),
                     out_path(c, "profile_gt.png"));
  for (const auto& [m, rec] : recs) {
    for (int f : c.eval_frames) {
      figures::write_png(figures::upscale(figures::difference_map(gt.frame(f), rec.frame(f), mask, diff_scale), kZoom),
                         out_path(c, std::string("diff_") + name(m) + "_t" + std::to_string(f) + ".png"));
    }
    figures::write_png(figures::upscale(figures::time_space_profile(rec, row, vmax_img), kZoom),
                       out_path(c, std::string("profile_") + name(m) + ".png"));
  }

  std::vector<std::pair<std::string, VelocityField>> fields;
  if (fs::exists(out_path(c, files::kGroundTruthVelocity))) {
    fields.emplace_back("gt", load_velocity(out_path(c, files::kGroundTruthVelocity)));
  }
  if (fs::exists(out_path(c, files::recon_velocity(ModelType::OF)))) {
    fields.emplace_back("of", load_velocity(out_path(c, files::recon_velocity(ModelType::OF))));
  }
  double vmax_v = 0;
  for (const auto& [label, v] : fields) {
    for (int f : c.eval_frames) {
      const auto s = figures::speed(v, f);
      vmax_v = std::max(vmax_v, *std::max_element(s.begin(), s.end()));
    }
  }
  for (const auto& [label, v] : fields) {
    require_same_dims(d, v.dims(), ("velocity " + label).c_str());
    for (int f : c.eval_frames) {
      figures::write_png(figures::upscale(figures::heatmap(figures::speed(v, f), d.nx, d.ny, vmax_v), kZoom),
                         out_path(c, "velocity_" + label + "_t" + std::to_string(f) + ".png"));
    }
  }
  return res;
}

std::vector<ModelConfig> sweep_points(const ExperimentConfig& c, ModelType m, int budget) {
  if (budget < 1) throw Error(ErrorKind::Usage, "sweep budget must be ≥ 1");
  const auto& s = c.sweep;
  const ModelConfig base = c.model(m);
  std::vector<ModelConfig> pts{base};
  std::mt19937_64 rng(s.seed * 1000003ULL + static_cast<std::uint64_t>(m));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto log_uniform = [&](const Range& r) { return r.lo * std::pow(r.hi / r.lo, unit(rng)); };
  auto uniform = [&](const Range& r) { return r.lo + (r.hi - r.lo) * unit(rng); };
  const bool uses_flow = m != ModelType::FW;
  for (int k = 1; k < budget; ++k) {
    ModelConfig p = base;
    p.params.alpha1 = log_uniform(s.alpha1);
    p.params.eps1 = log_uniform(s.eps1);
    if (uses_flow) {
      p.params.alpha3 = log_uniform(s.alpha3);
      p.params.eps3 = log_uniform(s.eps3);
    }
    if (m == ModelType::OF) {
      p.params.alpha2 = log_uniform(s.alpha2);
      p.params.eps2 = log_uniform(s.eps2);
      p.sigma = uniform(s.sigma);
    }
    pts.push_back(p);
  }
  return pts;
}

std::vector<SweepPoint> run_sweep(const SimulatedData& data, const ExperimentConfig& c, ModelType m, int budget) {
  std::vector<SweepPoint> board;
  const auto pts = sweep_points(c, m, budget);
  for (std::size_t k = 0; k < pts.size(); ++k) {
    SweepPoint sp{static_cast<int>(k), pts[k]};
    try {
      const auto rec = run_model(data, c, m, pts[k]);
      const auto r = metrics::evaluate(data.rho_gt, rec.rho, data.dynamic_mask);
      sp.psnr = r.mean_psnr;
      sp.ssim = r.mean_ssim;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::Divergence) throw;
      sp.diverged = true;
      sp.psnr = -INFINITY;
      sp.ssim = NAN;
    }
    board.push_back(sp);
  }
  std::stable_sort(board.begin(), board.end(), [](const SweepPoint& a, const SweepPoint& b) {
    return a.psnr > b.psnr;
  });
  return board;
}

std::string leaderboard_csv(ModelType m, const std::vector<SweepPoint>& board) {
  using metrics::format_number;
  std::string out = "rank,model,point,alpha1,alpha2,alpha3,eps1,eps2,eps3,sigma,psnr_db,ssim,diverged\r\n";
  for (std::size_t r = 0; r < board.size(); ++r) {
    const auto& p = board[r];
    const auto& q = p.params.params;
    out += std::to_string(r + 1) + "," + name(m) + "," + std::to_string(p.index) + "," + format_number(q.alpha1) +
           "," + format_number(q.alpha2) + "," + format_number(q.alpha3) + "," + format_number(q.eps1) + "," +
           format_number(q.eps2) + "," + format_number(q.eps3) + "," + format_number(p.params.sigma) + "," +
           format_number(p.psnr) + "," + format_number(p.ssim) + "," + (p.diverged ? "1" : "0") + "\r\n";
  }
  return out;
}

SweepResult cmd_sweep(const ExperimentConfig& c) {
  const auto data = simulate(c);
  fs::create_directories(c.output_dir);
  SweepResult res{{}, c};
  for (ModelType m : c.sweep.models) {
    auto board = run_sweep(data, c, m, c.sweep.budget);
    write_file_atomic(out_path(c, files::leaderboard(m)), leaderboard_csv(m, board));
    if (!board.front().diverged) res.best.models[m] = board.front().params;
    res.boards[m] = std::move(board);
  }
  write_file_atomic(out_path(c, files::kBestParams), to_yaml(res.best));
  return res;
}

}  // namespace cineflow::app
