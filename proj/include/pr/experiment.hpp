#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "pr/metric.hpp"
#include "pr/solvers.hpp"
#include "pr/training.hpp"
#include "pr/types.hpp"
#include "pr/unfolded.hpp"

namespace pr {

struct DatasetConfig {
  std::string train_dir;
  std::string val_dir;
  std::string test_dir;
  int sample_rate = 16000;
  double crop_seconds = 2.0;  // <= 0 disables cropping
  int max_train = 40;
  int max_val = 4;
  int max_test = 10;
  bool resample = false;  // opt-in rate conversion on load
};

struct SolverBudgets {
  double rho = 1e-3;
  int gla_iters = 1500;
  std::vector<int> admm_budgets = {15, 30, 75, 150, 1500};
  std::vector<int> uadmm_passes = {1, 2, 4};  // whole-network applications
};

struct ModelConfig {
  int layers = 15;        // T
  int segments = 3;       // C
  double w_tilde_init = 0.01;
};

struct ExperimentConfig {
  std::uint64_t seed = 1234;
  std::string output_dir = "out";
  DatasetConfig data;
  StftConfig stft;
  SolverBudgets solvers;
  TrainConfig train;
  ModelConfig model;
};

// Strict parse: unknown keys and type mismatches raise ValidationError.
ExperimentConfig load_config(const std::string& path);
// PR_SEED, when set, overrides the configured seed.
void apply_env_seed(ExperimentConfig& cfg);

struct MetricRow {
  std::string signal;
  std::string method;
  int budget = 0;
  double stoi = 0.0;
  double si_sdr = 0.0;       // dB
  double spectral = 0.0;     // || |A xhat| - r || / ||r||
};

struct SummaryRow {
  std::string method;
  int budget = 0;
  double median = 0.0;  // over STOI
  double q1 = 0.0;
  double q3 = 0.0;
  int n = 0;
};

struct ReportHeader {
  std::uint64_t seed = 0;
  int sample_rate = 0;
  int window_length = 0;
  double rho = 0.0;
  int n_test = 0;
  std::string corpus_note;
};

struct ModelCurves {
  std::string model;
  std::vector<MetricCurve> curves;
};

struct Report {
  ReportHeader header;
  std::vector<MetricRow> rows;
  std::vector<SummaryRow> summary;
  std::vector<std::string> failures;
  std::vector<ModelCurves> curves;
};

bool operator==(const MetricRow&, const MetricRow&);
bool operator==(const SummaryRow&, const SummaryRow&);
bool operator==(const ReportHeader&, const ReportHeader&);
bool operator==(const ModelCurves&, const ModelCurves&);
bool operator==(const MetricCurve&, const MetricCurve&);
bool operator==(const Report&, const Report&);

// Wall-clock timings live outside the report so reports stay byte-identical
// under a fixed seed.
struct Timings {
  struct Row {
    std::string signal;
    std::string method;
    int budget = 0;
    double seconds = 0.0;
  };
  std::vector<Row> rows;
};

struct NamedModel {
  std::string name;
  UnfoldedModel model;
};

// Evaluates every configured method on the test set: GLA, ADMM at each
// budget, and each model applied uadmm_passes times (budget k*T). Signals
// that fail are recorded under failures and skipped.
std::pair<Report, Timings> run_experiment(const ExperimentConfig& cfg,
                                          const std::vector<NamedModel>& models);

// report.json (the full report), summary.csv (method,budget,median,q1,q3,n
// over STOI) and curves/<model>.csv.
void emit_report(const Report& report, const std::string& dir);
Report load_report(const std::string& file);

void write_timings_csv(const Timings& timings, const std::string& path);
void write_trace_csv(const SolverTrace& trace, const std::string& path);

// Sorted WAV paths under dir, capped at max_count (0 means no cap).
std::vector<std::string> list_wavs(const std::string& dir, int max_count);

// Loads a corpus member: rate check (or opt-in resample) plus crop.
Signal load_dataset_signal(const std::string& path, const DatasetConfig& data,
                           std::string* warning = nullptr);

}  // namespace pr
