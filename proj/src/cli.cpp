#include "graphkern/cli.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "graphkern/error.hpp"
#include "graphkern/io.hpp"

namespace graphkern::cli {

namespace {

using nlohmann::json;

enum class LogLevel { Quiet, Info, Debug };

LogLevel log_level() {
  const char* env = std::getenv("GRAPHKERN_LOG");
  if (env == nullptr) return LogLevel::Info;
  const std::string v(env);
  if (v == "quiet" || v == "0" || v == "error") return LogLevel::Quiet;
  if (v == "debug" || v == "2") return LogLevel::Debug;
  return LogLevel::Info;
}

[[noreturn]] void config_error(const std::string& what) { throw Error(ErrorCode::ConfigError, what); }

void check_keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) config_error(where + " must be an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, _] : obj.items()) {
    if (!ok.count(key)) config_error("unknown key '" + key + "' in " + where);
  }
}

template <typename T>
void read(const json& obj, const char* key, T& target, const std::string& where) {
  if (!obj.contains(key)) return;
  try {
    target = obj.at(key).get<T>();
  } catch (const json::exception&) {
    config_error(where + "." + key + " has the wrong type");
  }
}

std::filesystem::path resolve(const std::filesystem::path& p, const std::filesystem::path& base) {
  return p.is_absolute() || base.empty() ? p : base / p;
}

NormType parse_norm(int q) {
  if (q == 1) return NormType::L1;
  if (q == 2) return NormType::L2;
  config_error("solver.q must be 1 or 2");
}

MomentumRule parse_momentum(const std::string& name) {
  if (name == "convex") return MomentumRule::Convex;
  if (name == "extrapolate") return MomentumRule::Extrapolate;
  config_error("solver.momentum must be 'convex' or 'extrapolate'");
}

}  // namespace

RunConfig parse_run_config(const json& doc, const std::filesystem::path& base_dir) {
  RunConfig cfg;
  check_keys(doc, "config", {"data", "kernel_grid", "solver", "experiment", "fit", "output_dir"});

  if (!doc.contains("data")) config_error("config.data is required");
  const auto& data = doc.at("data");
  check_keys(data, "data", {"measurements", "coordinates", "synthetic"});
  const bool file_mode = data.contains("measurements") || data.contains("coordinates");
  if (file_mode && data.contains("synthetic")) {
    config_error("data.synthetic cannot be combined with measurement files");
  }
  if (file_mode) {
    if (!data.contains("measurements") || !data.contains("coordinates")) {
      config_error("file mode needs both data.measurements and data.coordinates");
    }
    std::string m, c;
    read(data, "measurements", m, "data");
    read(data, "coordinates", c, "data");
    cfg.measurements = resolve(m, base_dir);
    cfg.coordinates = resolve(c, base_dir);
  } else if (data.contains("synthetic")) {
    const auto& s = data.at("synthetic");
    check_keys(s, "data.synthetic",
               {"num_nodes", "num_samples", "graph_smoothing", "input_norm", "num_bumps",
                "bump_variance", "offset", "seed"});
    SyntheticScenario sc;
    read(s, "num_nodes", sc.num_nodes, "data.synthetic");
    read(s, "num_samples", sc.num_samples, "data.synthetic");
    read(s, "graph_smoothing", sc.graph_smoothing, "data.synthetic");
    read(s, "input_norm", sc.input_norm, "data.synthetic");
    read(s, "num_bumps", sc.num_bumps, "data.synthetic");
    read(s, "bump_variance", sc.bump_variance, "data.synthetic");
    read(s, "offset", sc.offset, "data.synthetic");
    read(s, "seed", sc.seed, "data.synthetic");
    cfg.synthetic = sc;
  } else {
    config_error("data needs either measurement files or a synthetic block");
  }

  auto& ex = cfg.experiment;
  if (doc.contains("kernel_grid")) {
    const auto& g = doc.at("kernel_grid");
    check_keys(g, "kernel_grid", {"family", "lo", "hi", "count"});
    std::string family = std::string(to_string(ex.grid.family));
    read(g, "family", family, "kernel_grid");
    ex.grid.family = kernel_family_from_string(family);
    read(g, "lo", ex.grid.lo, "kernel_grid");
    read(g, "hi", ex.grid.hi, "kernel_grid");
    read(g, "count", ex.grid.count, "kernel_grid");
  }
  if (doc.contains("solver")) {
    const auto& s = doc.at("solver");
    check_keys(s, "solver", {"mu0", "max_iterations", "epsilon", "radius", "q", "momentum"});
    read(s, "mu0", ex.solver.mu0, "solver");
    read(s, "max_iterations", ex.solver.max_iterations, "solver");
    read(s, "epsilon", ex.solver.epsilon, "solver");
    read(s, "radius", ex.solver.radius, "solver");
    int q = static_cast<int>(ex.solver.q);
    read(s, "q", q, "solver");
    ex.solver.q = parse_norm(q);
    std::string momentum = "convex";
    read(s, "momentum", momentum, "solver");
    ex.solver.momentum = parse_momentum(momentum);
  }
  if (doc.contains("experiment")) {
    const auto& e = doc.at("experiment");
    check_keys(e, "experiment",
               {"snr_db", "n_train_sweep", "n_test", "n_realizations", "single_variance",
                "grid_search", "linear_alphas", "single_alphas", "single_betas", "linear_alpha",
                "single_alpha", "single_beta", "seed", "threads"});
    read(e, "snr_db", ex.snr_db, "experiment");
    read(e, "n_train_sweep", cfg.n_train_sweep, "experiment");
    read(e, "n_test", ex.n_test, "experiment");
    read(e, "n_realizations", ex.n_realizations, "experiment");
    read(e, "single_variance", ex.single_variance, "experiment");
    read(e, "grid_search", ex.grid_search, "experiment");
    read(e, "linear_alphas", ex.linear_grid.alphas, "experiment");
    read(e, "single_alphas", ex.single_grid.alphas, "experiment");
    read(e, "single_betas", ex.single_grid.betas, "experiment");
    read(e, "linear_alpha", ex.linear_alpha, "experiment");
    read(e, "single_alpha", ex.single.alpha, "experiment");
    read(e, "single_beta", ex.single.beta, "experiment");
    read(e, "seed", ex.master_seed, "experiment");
    read(e, "threads", ex.threads, "experiment");
  }
  if (cfg.n_train_sweep.empty()) config_error("experiment.n_train_sweep is empty");
  ex.n_train = cfg.n_train_sweep.back();

  if (doc.contains("fit")) {
    const auto& f = doc.at("fit");
    check_keys(f, "fit", {"alpha", "beta"});
    Regularization reg = ex.single;
    read(f, "alpha", reg.alpha, "fit");
    read(f, "beta", reg.beta, "fit");
    if (!(reg.alpha > 0.0) || !(reg.beta >= 0.0)) config_error("fit needs alpha > 0 and beta >= 0");
    cfg.fit = reg;
  }
  if (doc.contains("output_dir")) {
    std::string out;
    read(doc, "output_dir", out, "config");
    cfg.output_dir = resolve(out, base_dir);
  }

  ex.solver.validate();
  (void)ex.grid.specs();
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open config " + path.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ConfigError, path.string() + ": " + e.what());
  }
  return parse_run_config(doc, path.parent_path());
}

json default_config_json() {
  const ExperimentConfig ex;
  const SyntheticScenario sc;
  return {
      {"data",
       {{"synthetic",
         {{"num_nodes", sc.num_nodes},
          {"num_samples", sc.num_samples},
          {"graph_smoothing", sc.graph_smoothing},
          {"input_norm", sc.input_norm},
          {"num_bumps", sc.num_bumps},
          {"bump_variance", sc.bump_variance},
          {"offset", sc.offset},
          {"seed", sc.seed}}}}},
      {"kernel_grid",
       {{"family", to_string(ex.grid.family)}, {"lo", ex.grid.lo}, {"hi", ex.grid.hi},
        {"count", ex.grid.count}}},
      {"solver",
       {{"mu0", ex.solver.mu0},
        {"max_iterations", ex.solver.max_iterations},
        {"epsilon", ex.solver.epsilon},
        {"radius", ex.solver.radius},
        {"q", static_cast<int>(ex.solver.q)},
        {"momentum", "convex"}}},
      {"experiment",
       {{"snr_db", ex.snr_db},
        {"n_train_sweep", std::vector<int>{4, 8, 16, 30}},
        {"n_test", ex.n_test},
        {"n_realizations", ex.n_realizations},
        {"single_variance", ex.single_variance},
        {"grid_search", ex.grid_search},
        {"linear_alphas", ex.linear_grid.alphas},
        {"single_alphas", ex.single_grid.alphas},
        {"single_betas", ex.single_grid.betas},
        {"linear_alpha", ex.linear_alpha},
        {"single_alpha", ex.single.alpha},
        {"single_beta", ex.single.beta},
        {"seed", ex.master_seed},
        {"threads", ex.threads}}},
      {"output_dir", "out"},
  };
}

Dataset load_dataset(const RunConfig& config) {
  if (config.synthetic) return generate_synthetic(*config.synthetic).dataset;
  const auto data = io::ingest_dataset(*config.measurements, *config.coordinates);
  auto graph = std::make_shared<const Graph>(Graph::from_adjacency(geodesic_adjacency(data.coords)));
  return dataset_from_series(data.series, std::move(graph));
}

namespace {

struct Logger {
  std::ostream& err;
  LogLevel level = log_level();

  template <typename... Args>
  void info(const Args&... args) const {
    if (level >= LogLevel::Info) ((err << args), ...) << '\n';
  }
  template <typename... Args>
  void debug(const Args&... args) const {
    if (level >= LogLevel::Debug) ((err << args), ...) << '\n';
  }
};

void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create " + dir.string() + ": " + ec.message());
}

std::vector<std::string> node_header(Eigen::Index m) {
  std::vector<std::string> out;
  for (Eigen::Index j = 0; j < m; ++j) out.push_back("node_" + std::to_string(j));
  return out;
}

void write_rho_csv(const std::filesystem::path& path, const std::vector<KernelSpec>& specs,
                   const Eigen::VectorXd& rho) {
  Eigen::MatrixXd rows(rho.size(), 3);
  for (Eigen::Index s = 0; s < rho.size(); ++s) {
    rows(s, 0) = static_cast<double>(s);
    rows(s, 1) = specs[static_cast<std::size_t>(s)].parameter;
    rows(s, 2) = rho(s);
  }
  io::write_csv(path, {"index", "parameter", "rho"}, rows);
}

int cmd_fit(const RunConfig& cfg, const Logger& log, std::ostream& out) {
  const Dataset data = load_dataset(cfg);
  const Regularization reg = cfg.fit.value_or(cfg.experiment.single);
  log.info("fit: ", data.num_samples(), " samples, ", data.graph->num_nodes(), " nodes, ",
           cfg.experiment.grid.count, " kernels, alpha=", reg.alpha, " beta=", reg.beta);

  auto fitted = fit_multi_kernel(data.inputs, data.targets, data.graph, cfg.experiment.grid, reg,
                                 cfg.experiment.solver);
  ensure_dir(cfg.output_dir);
  io::save_model(cfg.output_dir / "model.json", fitted.model);
  {
    std::ofstream trace(cfg.output_dir / "trace.csv");
    if (!trace) throw Error(ErrorCode::IoError, "cannot write trace.csv");
    fitted.optimization.trace.write_csv(trace);
  }
  write_rho_csv(cfg.output_dir / "rho.csv", fitted.model.dictionary().specs(), fitted.model.rho());

  const auto& trace = fitted.optimization.trace;
  out << "iterations: " << trace.iterations() << " ("
      << (trace.status == TraceStatus::Converged ? "converged" : "max iterations") << ")\n"
      << "gamma: " << fitted.optimization.final_gamma << '\n'
      << "model: " << (cfg.output_dir / "model.json").string() << '\n';
  return kSuccess;
}

int cmd_predict(const std::filesystem::path& model_path, const std::filesystem::path& inputs_path,
                const std::optional<std::filesystem::path>& out_dir, std::ostream& out) {
  const auto model = io::load_model(model_path);
  const auto table = io::read_csv(inputs_path);
  if (table.values.cols() != model.dict->input_dim()) {
    throw Error(ErrorCode::DimensionMismatch,
                inputs_path.string() + " has " + std::to_string(table.values.cols()) +
                    " columns, model expects " + std::to_string(model.dict->input_dim()));
  }
  const Eigen::MatrixXd pred = model.predict_rows(table.values);
  const auto header = node_header(pred.cols());
  if (out_dir) {
    ensure_dir(*out_dir);
    io::write_csv(*out_dir / "predictions.csv", header, pred);
  } else {
    io::write_csv(out, header, pred);
  }
  return kSuccess;
}

int cmd_experiment(const RunConfig& cfg, const Logger& log, std::ostream& out) {
  const Dataset data = load_dataset(cfg);
  ensure_dir(cfg.output_dir);

  json sweep = json::array();
  std::ostringstream table;
  table << "n_train,method,mean_nmse,std_nmse,successes\n";
  table.precision(17);
  Eigen::VectorXd rho_instance;
  std::vector<double> parameters;

  for (int n : cfg.n_train_sweep) {
    ExperimentConfig ex = cfg.experiment;
    ex.n_train = n;
    const auto start = std::chrono::steady_clock::now();
    AggregateReport report = monte_carlo(data, ex);
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    log.info("n_train=", n, ": linear ", report.summary(Method::Linear).mean, ", single ",
             report.summary(Method::SingleKernel).mean, ", multi ",
             report.summary(Method::MultiKernel).mean, " (", secs, " s)");
    for (Method m : kMethods) {
      const auto& s = report.summary(m);
      table << n << ',' << to_string(m) << ',' << s.mean << ',' << s.stddev << ',' << s.successes
            << '\n';
    }
    if (n == cfg.n_train_sweep.back()) {
      rho_instance = report.representative_rho;
      parameters = report.kernel_parameters;
    }
    sweep.push_back(io::report_to_json(report));
  }

  {
    std::ofstream csv(cfg.output_dir / "nmse_vs_ntrain.csv");
    if (!csv) throw Error(ErrorCode::IoError, "cannot write nmse_vs_ntrain.csv");
    csv << table.str();
  }
  const auto specs = cfg.experiment.grid.specs();
  if (rho_instance.size() != static_cast<Eigen::Index>(specs.size())) {
    rho_instance = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(specs.size()));
  }
  write_rho_csv(cfg.output_dir / "rho_instance.csv", specs, rho_instance);

  json report = {{"n_train_sweep", cfg.n_train_sweep},
                 {"snr_db", cfg.experiment.snr_db},
                 {"n_realizations", cfg.experiment.n_realizations},
                 {"master_seed", cfg.experiment.master_seed},
                 {"results", std::move(sweep)}};
  std::ofstream js(cfg.output_dir / "report.json");
  if (!js) throw Error(ErrorCode::IoError, "cannot write report.json");
  js << report.dump(2) << '\n';

  out << table.str();
  return kSuccess;
}

int cmd_validate(const RunConfig& cfg, std::ostream& out) {
  const Dataset data = load_dataset(cfg);
  for (int n : cfg.n_train_sweep) {
    ExperimentConfig ex = cfg.experiment;
    ex.n_train = n;
    ex.validate(data.num_samples());
  }
  out << "ok: " << data.graph->num_nodes() << " nodes, " << data.num_samples() << " samples, "
      << cfg.experiment.grid.count << " kernels\n";
  return kSuccess;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multi-kernel regression for smooth graph signals"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  int threads = 0;
  std::string model_path;
  std::string inputs_path;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON run configuration")->required();
    sub->add_option("--out", out_dir, "Output directory (overrides output_dir)");
    sub->add_option("--seed", seed, "Master seed (overrides experiment.seed)");
    sub->add_option("--threads", threads, "Worker threads for Monte-Carlo trials")
        ->check(CLI::PositiveNumber);
  };
  auto* fit = app.add_subcommand("fit", "Learn kernel weights and write a model file");
  add_common(fit);
  auto* experiment = app.add_subcommand("experiment", "Run the Monte-Carlo NMSE sweep");
  add_common(experiment);
  auto* validate = app.add_subcommand("validate-config", "Check a config and its data");
  add_common(validate);
  auto* predict = app.add_subcommand("predict", "Predict targets for new inputs");
  predict->add_option("--model", model_path, "Model file written by fit")->required();
  predict->add_option("--inputs", inputs_path, "CSV of inputs, one row per sample")->required();
  predict->add_option("--out", out_dir, "Output directory; stdout when omitted");

  std::vector<std::string> storage = args;
  if (storage.empty()) storage.emplace_back("graphkern");
  std::vector<char*> argv;
  for (auto& a : storage) argv.push_back(a.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kSuccess;
  } catch (const CLI::ParseError& e) {
    err << e.what() << '\n';
    return kInputError;
  }

  const Logger log{err};
  try {
    if (predict->parsed()) {
      std::optional<std::filesystem::path> dir;
      if (!out_dir.empty()) dir = out_dir;
      return cmd_predict(model_path, inputs_path, dir, out);
    }

    RunConfig cfg = load_run_config(config_path);
    if (!out_dir.empty()) cfg.output_dir = out_dir;
    if (seed) cfg.experiment.master_seed = *seed;
    if (threads > 0) cfg.experiment.threads = threads;
    log.debug("config: ", config_path, ", output: ", cfg.output_dir.string());

    if (fit->parsed()) return cmd_fit(cfg, log, out);
    if (experiment->parsed()) return cmd_experiment(cfg, log, out);
    if (validate->parsed()) return cmd_validate(cfg, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return is_numeric_failure(e.code()) ? kNumericFailure : kInputError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kNumericFailure;
  }
  return kInputError;
}

}  // namespace graphkern::cli
