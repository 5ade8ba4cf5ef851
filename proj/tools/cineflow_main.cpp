#include <CLI11.hpp>

#include <iostream>

#include "cineflow/pipeline.hpp"

using namespace cineflow;

int main(int argc, char** argv) {
  CLI::App app{"Joint reconstruction of complex cine MRI and motion"};
  app.require_subcommand(1);

  std::string config_path, model_name, out_dir;
  std::optional<std::uint64_t> seed;
  int budget = 0;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "YAML experiment config")->required();
    sub->add_option("--seed", seed, "base seed for every generator");
    sub->add_option("--out", out_dir, "output directory (overrides output_dir)");
  };
  auto* simulate = app.add_subcommand("simulate", "generate ground truth, coils, masks and k-space");
  add_common(simulate);
  auto* reconstruct = app.add_subcommand("reconstruct", "reconstruct one model from simulated k-space");
  add_common(reconstruct);
  reconstruct->add_option("--model", model_name, "fw, dt, of or cheat-of")->required();
  auto* evaluate = app.add_subcommand("evaluate", "masked metrics, summary table and figures");
  add_common(evaluate);
  auto* sweep = app.add_subcommand("sweep", "random hyperparameter search per model");
  add_common(sweep);
  sweep->add_option("--model", model_name, "sweep a single model");
  sweep->add_option("--budget", budget, "points per model (overrides sweep.budget)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? app::kExitOk : app::kExitUsage;
  }

  try {
    auto cfg = load_config(config_path);
    if (seed) cfg.reseed(*seed);
    if (!out_dir.empty()) cfg.output_dir = out_dir;

    if (simulate->parsed()) {
      app::cmd_simulate(cfg);
    } else if (reconstruct->parsed()) {
      const auto rec = app::cmd_reconstruct(cfg, parse_model(model_name));
      std::cerr << model_name << ": " << (rec.converged ? "converged" : "iteration limit reached") << "\n";
    } else if (evaluate->parsed()) {
      const auto res = app::cmd_evaluate(cfg);
      for (const auto& w : res.warnings) std::cerr << "warning: " << w << "\n";
      std::cout << app::summary_csv(res.reports);
    } else if (sweep->parsed()) {
      if (budget > 0) cfg.sweep.budget = budget;
      if (!model_name.empty()) cfg.sweep.models = {parse_model(model_name)};
      cfg.validate();
      const auto res = app::cmd_sweep(cfg);
      for (const auto& [m, board] : res.boards) {
        std::cerr << name(m) << ": best PSNR " << metrics::format_number(board.front().psnr) << " dB (point "
                  << board.front().index << " of " << board.size() << ")\n";
      }
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return app::exit_code(e.kind());
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return app::kExitData;
  }
  return app::kExitOk;
}
