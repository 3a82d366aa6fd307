#include "pr/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include <json.hpp>

#include "pr/audio.hpp"
#include "pr/divergence.hpp"
#include "pr/rng.hpp"
#include "pr/stoi.hpp"
#include "pr/transforms.hpp"
#include "pr/util.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace pr {

namespace {

// Rejects keys that the schema does not know about; typos in config files
// should fail loudly.
void check_keys(const json& j, const std::string& section,
                const std::set<std::string>& known) {
  if (!j.is_object()) {
    throw ValidationError("config section '" + section + "' must be an object");
  }
  for (const auto& item : j.items()) {
    if (!known.count(item.key())) {
      throw ValidationError("unknown config key '" + section + "." +
                            item.key() + "'");
    }
  }
}

template <typename T>
void read_field(const json& j, const std::string& section,
                const std::string& key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ValidationError("config key '" + section + "." + key +
                          "' has the wrong type");
  }
}

}  // namespace

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ValidationError("cannot open config: " + path);
  }
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ValidationError("config " + path + " is not valid JSON: " + e.what());
  }

  ExperimentConfig cfg;
  check_keys(j, "<root>",
             {"seed", "output_dir", "data", "stft", "solvers", "train"});
  read_field(j, "<root>", "seed", cfg.seed);
  read_field(j, "<root>", "output_dir", cfg.output_dir);

  if (j.contains("data")) {
    const json& d = j["data"];
    check_keys(d, "data",
               {"train_dir", "val_dir", "test_dir", "sample_rate",
                "crop_seconds", "max_train", "max_val", "max_test", "resample"});
    read_field(d, "data", "train_dir", cfg.data.train_dir);
    read_field(d, "data", "val_dir", cfg.data.val_dir);
    read_field(d, "data", "test_dir", cfg.data.test_dir);
    read_field(d, "data", "sample_rate", cfg.data.sample_rate);
    read_field(d, "data", "crop_seconds", cfg.data.crop_seconds);
    read_field(d, "data", "max_train", cfg.data.max_train);
    read_field(d, "data", "max_val", cfg.data.max_val);
    read_field(d, "data", "max_test", cfg.data.max_test);
    read_field(d, "data", "resample", cfg.data.resample);
  }
  if (j.contains("stft")) {
    const json& s = j["stft"];
    check_keys(s, "stft", {"window_length"});
    read_field(s, "stft", "window_length", cfg.stft.window_length);
    cfg.stft.hop = cfg.stft.window_length / 2;
  }
  if (j.contains("solvers")) {
    const json& s = j["solvers"];
    check_keys(s, "solvers",
               {"rho", "gla_iters", "admm_budgets", "uadmm_passes"});
    read_field(s, "solvers", "rho", cfg.solvers.rho);
    read_field(s, "solvers", "gla_iters", cfg.solvers.gla_iters);
    read_field(s, "solvers", "admm_budgets", cfg.solvers.admm_budgets);
    read_field(s, "solvers", "uadmm_passes", cfg.solvers.uadmm_passes);
  }
  if (j.contains("train")) {
    const json& t = j["train"];
    check_keys(t, "train",
               {"learning_rate", "batch_size", "max_epochs", "patience",
                "layers", "segments", "w_tilde_init"});
    read_field(t, "train", "learning_rate", cfg.train.learning_rate);
    read_field(t, "train", "batch_size", cfg.train.batch_size);
    read_field(t, "train", "max_epochs", cfg.train.max_epochs);
    read_field(t, "train", "patience", cfg.train.patience);
    read_field(t, "train", "layers", cfg.model.layers);
    read_field(t, "train", "segments", cfg.model.segments);
    read_field(t, "train", "w_tilde_init", cfg.model.w_tilde_init);
  }

  cfg.stft.validate();
  if (cfg.solvers.rho <= 0.0) {
    throw ValidationError("config: solvers.rho must be positive");
  }
  if (cfg.solvers.gla_iters < 0) {
    throw ValidationError("config: solvers.gla_iters must be >= 0");
  }
  for (int b : cfg.solvers.admm_budgets) {
    if (b < 0) throw ValidationError("config: admm_budgets must be >= 0");
  }
  for (int k : cfg.solvers.uadmm_passes) {
    if (k < 1) throw ValidationError("config: uadmm_passes must be >= 1");
  }
  if (cfg.data.sample_rate <= 0) {
    throw ValidationError("config: data.sample_rate must be positive");
  }
  if (cfg.model.layers < 0 || cfg.model.segments < 1) {
    throw ValidationError("config: train.layers must be >= 0 and train.segments >= 1");
  }
  return cfg;
}

void apply_env_seed(ExperimentConfig& cfg) {
  const char* env = std::getenv("PR_SEED");
  if (!env || !*env) return;
  try {
    size_t used = 0;
    const unsigned long long v = std::stoull(env, &used);
    if (used != std::string(env).size()) {
      throw std::invalid_argument("trailing characters");
    }
    cfg.seed = v;
  } catch (const std::exception&) {
    throw ValidationError("PR_SEED is not a valid unsigned integer: " +
                          std::string(env));
  }
}

std::vector<std::string> list_wavs(const std::string& dir, int max_count) {
  if (!fs::is_directory(dir)) {
    throw ValidationError("dataset directory does not exist: " + dir);
  }
  std::vector<std::string> paths;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".wav") {
      paths.push_back(entry.path().string());
    }
  }
  std::sort(paths.begin(), paths.end());
  if (max_count > 0 && static_cast<int>(paths.size()) > max_count) {
    paths.resize(max_count);
  }
  return paths;
}

Signal load_dataset_signal(const std::string& path, const DatasetConfig& data,
                           std::string* warning) {
  Signal s = load_wav(path, warning);
  if (s.sample_rate != data.sample_rate) {
    if (!data.resample) {
      throw ValidationError(path + ": sample rate " +
                            std::to_string(s.sample_rate) +
                            " does not match configured rate " +
                            std::to_string(data.sample_rate) +
                            " (set data.resample to convert)");
    }
    s = resample(s, data.sample_rate);
  }
  if (data.crop_seconds > 0.0) {
    const long max_len =
        static_cast<long>(data.crop_seconds * data.sample_rate);
    if (max_len >= 1 && s.length() > max_len) {
      s.samples = s.samples.head(max_len).eval();
    }
  }
  return s;
}

namespace {

double eval_si_sdr(const Signal& est, const Signal& ref) {
  const double ref_energy = ref.samples.squaredNorm();
  const double alpha = est.samples.dot(ref.samples) / ref_energy;
  const double target = alpha * alpha * ref_energy;
  const double err = (est.samples - alpha * ref.samples).squaredNorm();
  return 10.0 * std::log10(target / std::max(err, 1e-16 * target));
}

struct MethodRun {
  std::string method;
  int budget = 0;
  Signal estimate;
  double seconds = 0.0;
};

}  // namespace

std::pair<Report, Timings> run_experiment(const ExperimentConfig& cfg,
                                          const std::vector<NamedModel>& models) {
  Report report;
  Timings timings;
  report.header.seed = cfg.seed;
  report.header.sample_rate = cfg.data.sample_rate;
  report.header.window_length = cfg.stft.window_length;
  report.header.rho = cfg.solvers.rho;
  report.header.corpus_note = cfg.data.test_dir;

  const std::vector<std::string> files =
      list_wavs(cfg.data.test_dir, cfg.data.max_test);
  report.header.n_test = static_cast<int>(files.size());

  using Clock = std::chrono::steady_clock;

  for (const std::string& path : files) {
    const std::string name = fs::path(path).filename().string();
    try {
      std::string warning;
      const Signal ref = load_dataset_signal(path, cfg.data, &warning);
      if (!warning.empty()) {
        report.failures.push_back("warning: " + warning);
      }
      StftOperator op(cfg.stft, ref.length(), ref.sample_rate);
      const Measurements r{op.magnitudes(ref.samples)};
      const double r_norm = r.r.norm();
      if (r_norm == 0.0) {
        report.failures.push_back(name + ": zero measurements, skipped");
        continue;
      }
      Rng rng(derive_seed(cfg.seed, name));
      const Vec phi = rng.phases(r.r.size());
      CVec init(phi.size());
      for (long k = 0; k < phi.size(); ++k) {
        init[k] = Cplx(std::cos(phi[k]), std::sin(phi[k]));
      }
      const Signal x0{op.adjoint(cmul(r.r, init)), ref.sample_rate};

      std::vector<MethodRun> runs;
      if (cfg.solvers.gla_iters > 0) {
        const auto t0 = Clock::now();
        Signal xg = griffin_lim(r, x0, cfg.stft, cfg.solvers.gla_iters).first;
        runs.push_back({"gla", cfg.solvers.gla_iters, std::move(xg),
                        std::chrono::duration<double>(Clock::now() - t0).count()});
      }
      for (int budget : cfg.solvers.admm_budgets) {
        const auto t0 = Clock::now();
        AdmmState state = admm_pr(r, x0, CVec(), cfg.solvers.rho,
                                  prox_quadratic, cfg.stft, budget)
                              .first;
        runs.push_back({"admm", budget, std::move(state.x),
                        std::chrono::duration<double>(Clock::now() - t0).count()});
      }
      for (const NamedModel& nm : models) {
        for (int k : cfg.solvers.uadmm_passes) {
          const auto t0 = Clock::now();
          Signal est = iterate_model(nm.model, r, x0, cfg.stft, k);
          runs.push_back({nm.name, k * nm.model.T, std::move(est),
                          std::chrono::duration<double>(Clock::now() - t0).count()});
        }
      }

      for (MethodRun& run : runs) {
        MetricRow row;
        row.signal = name;
        row.method = run.method;
        row.budget = run.budget;
        row.si_sdr = eval_si_sdr(run.estimate, ref);
        row.spectral =
            (op.magnitudes(run.estimate.samples) - r.r).norm() / r_norm;
        row.stoi = stoi(ref, run.estimate);
        report.rows.push_back(std::move(row));
        timings.rows.push_back({name, run.method, run.budget, run.seconds});
      }
    } catch (const std::exception& e) {
      report.failures.push_back(name + ": " + e.what());
    }
  }

  // Per-(method, budget) STOI quartiles, in first-seen order.
  std::vector<std::pair<std::string, int>> keys;
  for (const MetricRow& row : report.rows) {
    const auto key = std::make_pair(row.method, row.budget);
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
      keys.push_back(key);
    }
  }
  for (const auto& [method, budget] : keys) {
    std::vector<double> vals;
    for (const MetricRow& row : report.rows) {
      if (row.method == method && row.budget == budget) {
        vals.push_back(row.stoi);
      }
    }
    const Quartiles q = quartiles(vals);
    report.summary.push_back(
        {method, budget, q.median, q.q1, q.q3, static_cast<int>(vals.size())});
  }

  // Learned-metric curves at r = 1 for every model.
  const Vec grid = Vec::LinSpaced(201, 0.0, 4.0);
  for (const NamedModel& nm : models) {
    report.curves.push_back({nm.name, sample_metric_curve(nm.model, 1.0, grid)});
  }
  return {std::move(report), std::move(timings)};
}

bool operator==(const MetricRow& a, const MetricRow& b) {
  return a.signal == b.signal && a.method == b.method && a.budget == b.budget &&
         a.stoi == b.stoi && a.si_sdr == b.si_sdr && a.spectral == b.spectral;
}
bool operator==(const SummaryRow& a, const SummaryRow& b) {
  return a.method == b.method && a.budget == b.budget && a.median == b.median &&
         a.q1 == b.q1 && a.q3 == b.q3 && a.n == b.n;
}
bool operator==(const ReportHeader& a, const ReportHeader& b) {
  return a.seed == b.seed && a.sample_rate == b.sample_rate &&
         a.window_length == b.window_length && a.rho == b.rho &&
         a.n_test == b.n_test && a.corpus_note == b.corpus_note;
}
bool operator==(const MetricCurve& a, const MetricCurve& b) {
  return a.r_value == b.r_value && a.layer_index == b.layer_index &&
         a.y.size() == b.y.size() && a.f.size() == b.f.size() &&
         (a.y.array() == b.y.array()).all() &&
         (a.f.array() == b.f.array()).all();
}
bool operator==(const ModelCurves& a, const ModelCurves& b) {
  return a.model == b.model && a.curves == b.curves;
}
bool operator==(const Report& a, const Report& b) {
  return a.header == b.header && a.rows == b.rows && a.summary == b.summary &&
         a.failures == b.failures && a.curves == b.curves;
}

namespace {

json curve_to_json(const MetricCurve& c) {
  json j;
  j["layer"] = c.layer_index;
  j["r"] = c.r_value;
  j["y"] = std::vector<double>(c.y.data(), c.y.data() + c.y.size());
  j["f"] = std::vector<double>(c.f.data(), c.f.data() + c.f.size());
  return j;
}

MetricCurve curve_from_json(const json& j) {
  MetricCurve c;
  c.layer_index = j.at("layer").get<int>();
  c.r_value = j.at("r").get<double>();
  const auto y = j.at("y").get<std::vector<double>>();
  const auto f = j.at("f").get<std::vector<double>>();
  c.y = Eigen::Map<const Vec>(y.data(), static_cast<long>(y.size()));
  c.f = Eigen::Map<const Vec>(f.data(), static_cast<long>(f.size()));
  return c;
}

}  // namespace

void emit_report(const Report& report, const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    throw ValidationError("cannot create report directory " + dir + ": " +
                          ec.message());
  }

  json j;
  j["header"] = {{"seed", report.header.seed},
                 {"sample_rate", report.header.sample_rate},
                 {"window_length", report.header.window_length},
                 {"rho", report.header.rho},
                 {"n_test", report.header.n_test},
                 {"corpus_note", report.header.corpus_note}};
  j["rows"] = json::array();
  for (const MetricRow& row : report.rows) {
    j["rows"].push_back({{"signal", row.signal},
                         {"method", row.method},
                         {"budget", row.budget},
                         {"stoi", row.stoi},
                         {"si_sdr", row.si_sdr},
                         {"spectral", row.spectral}});
  }
  j["summary"] = json::array();
  for (const SummaryRow& row : report.summary) {
    j["summary"].push_back({{"method", row.method},
                            {"budget", row.budget},
                            {"median", row.median},
                            {"q1", row.q1},
                            {"q3", row.q3},
                            {"n", row.n}});
  }
  j["failures"] = report.failures;
  j["curves"] = json::array();
  for (const ModelCurves& mc : report.curves) {
    json entry;
    entry["model"] = mc.model;
    entry["curves"] = json::array();
    for (const MetricCurve& c : mc.curves) {
      entry["curves"].push_back(curve_to_json(c));
    }
    j["curves"].push_back(std::move(entry));
  }

  {
    const std::string path = (fs::path(dir) / "report.json").string();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write " + path);
    out << j.dump(2) << "\n";
    if (!out) throw std::runtime_error("failed writing " + path);
  }
  {
    const std::string path = (fs::path(dir) / "summary.csv").string();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write " + path);
    out << "method,budget,median,q1,q3,n\n";
    for (const SummaryRow& row : report.summary) {
      out << row.method << "," << row.budget << "," << fmt_double(row.median)
          << "," << fmt_double(row.q1) << "," << fmt_double(row.q3) << ","
          << row.n << "\n";
    }
    if (!out) throw std::runtime_error("failed writing " + path);
  }
  if (!report.curves.empty()) {
    const fs::path cdir = fs::path(dir) / "curves";
    fs::create_directories(cdir, ec);
    if (ec) {
      throw ValidationError("cannot create " + cdir.string() + ": " +
                            ec.message());
    }
    for (const ModelCurves& mc : report.curves) {
      write_metric_csv(mc.curves, (cdir / (mc.model + ".csv")).string());
    }
  }
}

Report load_report(const std::string& file) {
  std::ifstream in(file);
  if (!in) {
    throw ValidationError("cannot open report: " + file);
  }
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ValidationError("report " + file + " is not valid JSON: " + e.what());
  }
  try {
    Report report;
    const json& h = j.at("header");
    report.header.seed = h.at("seed").get<std::uint64_t>();
    report.header.sample_rate = h.at("sample_rate").get<int>();
    report.header.window_length = h.at("window_length").get<int>();
    report.header.rho = h.at("rho").get<double>();
    report.header.n_test = h.at("n_test").get<int>();
    report.header.corpus_note = h.at("corpus_note").get<std::string>();
    for (const json& r : j.at("rows")) {
      report.rows.push_back({r.at("signal").get<std::string>(),
                             r.at("method").get<std::string>(),
                             r.at("budget").get<int>(),
                             r.at("stoi").get<double>(),
                             r.at("si_sdr").get<double>(),
                             r.at("spectral").get<double>()});
    }
    for (const json& s : j.at("summary")) {
      report.summary.push_back({s.at("method").get<std::string>(),
                                s.at("budget").get<int>(),
                                s.at("median").get<double>(),
                                s.at("q1").get<double>(),
                                s.at("q3").get<double>(),
                                s.at("n").get<int>()});
    }
    report.failures = j.at("failures").get<std::vector<std::string>>();
    for (const json& mc : j.at("curves")) {
      ModelCurves entry;
      entry.model = mc.at("model").get<std::string>();
      for (const json& c : mc.at("curves")) {
        entry.curves.push_back(curve_from_json(c));
      }
      report.curves.push_back(std::move(entry));
    }
    return report;
  } catch (const json::exception& e) {
    throw ValidationError("report " + file + " is malformed: " + e.what());
  }
}

void write_timings_csv(const Timings& timings, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + path);
  out << "signal,method,budget,seconds\n";
  for (const Timings::Row& row : timings.rows) {
    out << row.signal << "," << row.method << "," << row.budget << ","
        << fmt_double(row.seconds) << "\n";
  }
  if (!out) throw std::runtime_error("failed writing " + path);
}

void write_trace_csv(const SolverTrace& trace, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + path);
  out << "iteration,objective,primal_residual,seconds\n";
  for (size_t i = 0; i < trace.rows.size(); ++i) {
    const SolverTrace::Row& row = trace.rows[i];
    out << (i + 1) << "," << fmt_double(row.objective) << ","
        << fmt_double(row.primal_residual) << "," << fmt_double(row.seconds)
        << "\n";
  }
  if (!out) throw std::runtime_error("failed writing " + path);
}

}  // namespace pr
