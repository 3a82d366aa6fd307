#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>

#include "pr/audio.hpp"
#include "pr/divergence.hpp"
#include "pr/experiment.hpp"
#include "pr/metric.hpp"
#include "pr/rng.hpp"
#include "pr/stoi.hpp"
#include "pr/synth.hpp"
#include "pr/training.hpp"
#include "pr/transforms.hpp"
#include "pr/unfolded.hpp"
#include "pr/util.hpp"

namespace fs = std::filesystem;
using namespace pr;

namespace {

Signal initial_estimate(const StftOperator& op, const Measurements& r,
                        std::uint64_t phase_seed) {
  Rng rng(phase_seed);
  const Vec phi = rng.phases(r.r.size());
  CVec init(phi.size());
  for (long k = 0; k < phi.size(); ++k) {
    init[k] = Cplx(std::cos(phi[k]), std::sin(phi[k]));
  }
  return Signal{op.adjoint(cmul(r.r, init)), op.sample_rate()};
}

std::vector<Signal> load_corpus(const std::string& dir, int max_count,
                                const DatasetConfig& data) {
  std::vector<Signal> out;
  for (const std::string& path : list_wavs(dir, max_count)) {
    std::string warning;
    out.push_back(load_dataset_signal(path, data, &warning));
    if (!warning.empty()) {
      std::cerr << "warning: " << warning << "\n";
    }
  }
  if (out.empty()) {
    throw ValidationError("no WAV files found in " + dir);
  }
  return out;
}

int cmd_run(const std::string& config_path, const std::string& method,
            int iters, const std::string& model_path, const std::string& in_path,
            const std::string& out_path, const std::string& trace_path) {
  ExperimentConfig cfg = load_config(config_path);
  apply_env_seed(cfg);

  std::string warning;
  const Signal ref = load_dataset_signal(in_path, cfg.data, &warning);
  if (!warning.empty()) std::cerr << "warning: " << warning << "\n";

  StftOperator op(cfg.stft, ref.length(), ref.sample_rate);
  const Measurements r{op.magnitudes(ref.samples)};
  const Signal x0 = initial_estimate(
      op, r, derive_seed(cfg.seed, fs::path(in_path).filename().string()));

  Signal estimate;
  SolverTrace trace;
  if (method == "gla") {
    auto res = griffin_lim(r, x0, cfg.stft, iters > 0 ? iters : cfg.solvers.gla_iters);
    estimate = std::move(res.first);
    trace = std::move(res.second);
  } else if (method == "admm") {
    auto res = admm_pr(r, x0, CVec(), cfg.solvers.rho, prox_quadratic, cfg.stft,
                       iters > 0 ? iters : 1500);
    estimate = std::move(res.first.x);
    trace = std::move(res.second);
  } else if (method == "uadmm") {
    if (model_path.empty()) {
      throw ValidationError("--model is required for method uadmm");
    }
    const UnfoldedModel model = load_checkpoint(model_path).first;
    int k = 1;
    if (iters > 0) {
      if (model.T == 0 || iters % model.T != 0) {
        throw ValidationError("--iters for uadmm must be a positive multiple of T=" +
                              std::to_string(model.T));
      }
      k = iters / model.T;
    }
    estimate = iterate_model(model, r, x0, cfg.stft, k);
  } else {
    throw ValidationError("unknown method: " + method);
  }

  save_wav(out_path, estimate);
  if (!trace_path.empty() && !trace.rows.empty()) {
    write_trace_csv(trace, trace_path);
  }

  const double spectral = (op.magnitudes(estimate.samples) - r.r).norm() / r.r.norm();
  std::cout << "spectral_distance " << fmt_double(spectral) << "\n";
  try {
    std::cout << "stoi " << fmt_double(stoi(ref, estimate)) << "\n";
  } catch (const ValidationError& e) {
    std::cerr << "stoi unavailable: " << e.what() << "\n";
  }
  const LossResult loss = training_loss(estimate, ref);
  std::cout << "si_sdr " << fmt_double(-loss.value) << "\n";
  return 0;
}

int cmd_train(const std::string& config_path, bool tied,
              const std::string& out_path) {
  ExperimentConfig cfg = load_config(config_path);
  apply_env_seed(cfg);
  cfg.train.seed = cfg.seed;

  const std::vector<Signal> train_set =
      load_corpus(cfg.data.train_dir, cfg.data.max_train, cfg.data);
  const std::vector<Signal> val_set =
      load_corpus(cfg.data.val_dir, cfg.data.max_val, cfg.data);

  UnfoldedModel model = UnfoldedModel::quadratic_init(
      cfg.model.layers, cfg.model.segments, tied, cfg.solvers.rho);
  // w_tilde = 0 is a stationary point of w = -w_tilde^2; a small nonzero
  // seed keeps the quadratic behaviour while letting the slopes train.
  for (LayerParams& lp : model.layers) {
    lp.apl.w_tilde.setConstant(cfg.model.w_tilde_init);
  }

  const TrainHistory history = train(model, train_set, val_set, cfg.stft, cfg.train);

  TrainMeta meta;
  meta.seed = cfg.train.seed;
  meta.learning_rate = cfg.train.learning_rate;
  meta.epochs_run = static_cast<int>(history.epochs.size()) - 1;
  meta.best_epoch = history.best_epoch;
  meta.best_val_loss = history.best_val_loss;
  meta.final_train_loss = history.epochs.back().train_loss;
  meta.stopped_early = history.stopped_early;
  save_checkpoint(model, meta, out_path);

  for (size_t e = 0; e < history.epochs.size(); ++e) {
    std::cout << "epoch " << e << " train " << fmt_double(history.epochs[e].train_loss)
              << " val " << fmt_double(history.epochs[e].val_loss) << "\n";
  }
  std::cout << "best_epoch " << history.best_epoch << " best_val "
            << fmt_double(history.best_val_loss)
            << (history.stopped_early ? " (stopped early)" : "") << "\n";
  std::cout << "saved " << out_path << "\n";
  return 0;
}

int cmd_eval(const std::string& config_path,
             const std::vector<std::string>& model_paths,
             const std::string& report_dir) {
  ExperimentConfig cfg = load_config(config_path);
  apply_env_seed(cfg);

  std::vector<NamedModel> models;
  for (const std::string& path : model_paths) {
    NamedModel nm;
    nm.name = fs::path(path).stem().string();
    nm.model = load_checkpoint(path).first;
    models.push_back(std::move(nm));
  }

  auto [report, timings] = run_experiment(cfg, models);
  emit_report(report, report_dir);
  write_timings_csv(timings, (fs::path(report_dir) / "timings.csv").string());

  for (const SummaryRow& row : report.summary) {
    std::cout << row.method << "@" << row.budget << " median_stoi "
              << fmt_double(row.median) << " n " << row.n << "\n";
  }
  for (const std::string& f : report.failures) {
    std::cerr << f << "\n";
  }
  std::cout << "report written to " << report_dir << "\n";
  return 0;
}

int cmd_recover_metric(const std::string& model_path, double r, double ymin,
                       double ymax, int points, const std::string& out_path) {
  if (points < 2 || !(ymax > ymin)) {
    throw ValidationError("need points >= 2 and ymax > ymin");
  }
  const UnfoldedModel model = load_checkpoint(model_path).first;
  const Vec grid = Vec::LinSpaced(points, ymin, ymax);
  const std::vector<MetricCurve> curves = sample_metric_curve(model, r, grid);
  write_metric_csv(curves, out_path);
  std::cout << "wrote " << curves.size() << " curve(s) to " << out_path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"phase retrieval toolkit: classical solvers, the unfolded "
               "ADMM network, and learned-metric recovery"};
  app.require_subcommand(1);

  // run
  std::string run_config, run_method, run_model, run_in, run_out, run_trace;
  int run_iters = 0;
  CLI::App* run = app.add_subcommand("run", "reconstruct one WAV file");
  run->add_option("--config", run_config, "experiment config (JSON)")->required();
  run->add_option("--method", run_method, "gla | admm | uadmm")->required();
  run->add_option("--iters", run_iters, "iteration budget (uadmm: multiple of T)");
  run->add_option("--model", run_model, "checkpoint for uadmm");
  run->add_option("--in", run_in, "input WAV")->required();
  run->add_option("--out", run_out, "output WAV")->required();
  run->add_option("--trace", run_trace, "optional per-iteration trace CSV");

  // train
  std::string train_config, train_out;
  bool tied = false, untied = false;
  CLI::App* tr = app.add_subcommand("train", "train the unfolded model");
  tr->add_option("--config", train_config, "experiment config (JSON)")->required();
  tr->add_flag("--tied", tied, "share parameters across layers");
  tr->add_flag("--untied", untied, "per-layer parameters");
  tr->add_option("--out", train_out, "output checkpoint path")->required();

  // eval
  std::string eval_config, eval_report;
  std::vector<std::string> eval_models;
  CLI::App* ev = app.add_subcommand("eval", "evaluate solvers and models on the test set");
  ev->add_option("--config", eval_config, "experiment config (JSON)")->required();
  ev->add_option("--models", eval_models, "checkpoint paths")->expected(-1);
  ev->add_option("--report", eval_report, "report output directory")->required();

  // recover-metric
  std::string rm_model, rm_out;
  double rm_r = 1.0, rm_ymin = 0.0, rm_ymax = 4.0;
  int rm_points = 201;
  CLI::App* rm = app.add_subcommand("recover-metric",
                                    "sample the learned metric f_r from a checkpoint");
  rm->add_option("--model", rm_model, "checkpoint path")->required();
  rm->add_option("--r", rm_r, "measurement value r")->required();
  rm->add_option("--ymin", rm_ymin, "grid start")->required();
  rm->add_option("--ymax", rm_ymax, "grid end")->required();
  rm->add_option("--points", rm_points, "grid size")->required();
  rm->add_option("--out", rm_out, "output CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (run->parsed()) {
      return cmd_run(run_config, run_method, run_iters, run_model, run_in,
                     run_out, run_trace);
    }
    if (tr->parsed()) {
      if (tied == untied) {
        throw ValidationError("exactly one of --tied / --untied is required");
      }
      return cmd_train(train_config, tied, train_out);
    }
    if (ev->parsed()) {
      return cmd_eval(eval_config, eval_models, eval_report);
    }
    if (rm->parsed()) {
      return cmd_recover_metric(rm_model, rm_r, rm_ymin, rm_ymax, rm_points, rm_out);
    }
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "runtime failure: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
