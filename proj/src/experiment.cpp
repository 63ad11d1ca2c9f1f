#include "graphkern/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

namespace graphkern {

Dataset dataset_from_series(const Eigen::MatrixXd& series, std::shared_ptr<const Graph> graph) {
  if (series.rows() < 2) {
    throw Error(ErrorCode::EmptyTrainingSet, "a series needs at least two steps to form a pair");
  }
  if (graph && series.cols() != graph->num_nodes()) {
    throw Error(ErrorCode::DimensionMismatch, "series width does not match the graph");
  }
  const Eigen::Index pairs = series.rows() - 1;
  return {series.topRows(pairs), series.bottomRows(pairs), std::move(graph)};
}

std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t realization_seed(std::uint64_t master, std::uint64_t index) {
  return mix_seed(mix_seed(master) ^ index);
}

SyntheticData generate_synthetic(const SyntheticScenario& sc) {
  if (sc.num_nodes < 2 || sc.num_samples < 2 || sc.num_bumps < 0) {
    throw Error(ErrorCode::ConfigError, "synthetic scenario needs >= 2 nodes and >= 2 samples");
  }
  if (!(sc.input_norm > 0.0) || !(sc.bump_variance > 0.0) || !(sc.graph_smoothing >= 0.0)) {
    throw Error(ErrorCode::ConfigError, "synthetic scenario parameters out of range");
  }
  std::mt19937_64 rng(sc.seed);
  std::uniform_real_distribution<double> lat(sc.lat_min, sc.lat_max);
  std::uniform_real_distribution<double> lon(sc.lon_min, sc.lon_max);
  std::normal_distribution<double> gauss(0.0, 1.0);

  const int m = sc.num_nodes;
  SyntheticData out;
  out.coords.metric = NodeCoordinates::Metric::Geodesic;
  out.coords.positions.resize(m, 2);
  for (int i = 0; i < m; ++i) {
    out.coords.positions(i, 0) = lat(rng);
    out.coords.positions(i, 1) = lon(rng);
  }
  auto graph = std::make_shared<const Graph>(Graph::from_adjacency(geodesic_adjacency(out.coords)));

  const auto& spec = graph->spectrum();
  const Eigen::VectorXd response = (1.0 + sc.graph_smoothing * spec.eigenvalues.array()).inverse();
  const Eigen::MatrixXd lowpass =
      spec.eigenvectors * response.asDiagonal() * spec.eigenvectors.transpose();

  // Unit-RMS smooth signal.
  auto smooth_signal = [&] {
    Eigen::VectorXd w(m);
    for (int i = 0; i < m; ++i) w(i) = gauss(rng);
    Eigen::VectorXd g = lowpass * w;
    return Eigen::VectorXd(g / std::sqrt(g.squaredNorm() / m));
  };
  auto input_signal = [&] {
    return Eigen::VectorXd(smooth_signal() * (sc.input_norm / std::sqrt(static_cast<double>(m))));
  };

  const Eigen::VectorXd mean_field = smooth_signal();
  std::vector<Eigen::VectorXd> centers;
  std::vector<Eigen::VectorXd> patterns;
  for (int k = 0; k < sc.num_bumps; ++k) {
    centers.push_back(input_signal());
    patterns.push_back(smooth_signal());
  }

  Dataset& data = out.dataset;
  data.inputs.resize(sc.num_samples, m);
  data.targets.resize(sc.num_samples, m);
  for (int n = 0; n < sc.num_samples; ++n) {
    const Eigen::VectorXd x = input_signal();
    Eigen::VectorXd t = sc.offset * mean_field;
    for (int k = 0; k < sc.num_bumps; ++k) {
      t += std::exp(-(x - centers[k]).squaredNorm() / (2.0 * sc.bump_variance)) * patterns[k];
    }
    data.inputs.row(n) = x.transpose();
    data.targets.row(n) = t.transpose();
  }
  data.graph = std::move(graph);
  return out;
}

Eigen::MatrixXd add_noise_snr(const Eigen::MatrixXd& clean, double snr_db, std::uint64_t seed) {
  const double power = clean.squaredNorm() / static_cast<double>(std::max<Eigen::Index>(1, clean.size()));
  if (!(power > 0.0)) throw Error(ErrorCode::ZeroSignal, "clean target block is zero");
  const double sigma = std::sqrt(power / std::pow(10.0, snr_db / 10.0));
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, sigma);
  Eigen::MatrixXd noisy = clean;
  for (Eigen::Index j = 0; j < noisy.cols(); ++j) {
    for (Eigen::Index i = 0; i < noisy.rows(); ++i) noisy(i, j) += gauss(rng);
  }
  return noisy;
}

double nmse(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& truth) {
  if (pred.rows() != truth.rows() || pred.cols() != truth.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "prediction and truth shapes differ");
  }
  const double energy = truth.squaredNorm();
  if (!(energy > 0.0)) throw Error(ErrorCode::ZeroTruth, "truth block is zero");
  return (pred - truth).squaredNorm() / energy;
}

std::string_view to_string(Method method) {
  switch (method) {
    case Method::Linear: return "linear";
    case Method::SingleKernel: return "single_kernel";
    case Method::MultiKernel: return "multi_kernel";
  }
  return "unknown";
}

void ExperimentConfig::validate(Eigen::Index num_samples) const {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::ConfigError, what); };
  if (n_realizations < 1) fail("n_realizations must be >= 1");
  if (n_train < 1) fail("n_train must be >= 1");
  if (n_test < 0) fail("n_test must be >= 0");
  if (n_train >= num_samples) fail("n_train must be smaller than the number of samples");
  if (n_train + n_test > num_samples) fail("n_train + n_test exceeds the number of samples");
  if (!(single_variance > 0.0)) fail("single_variance must be positive");
  if (threads < 1) fail("threads must be >= 1");
  if (grid_search) {
    if (linear_grid.alphas.empty() || single_grid.alphas.empty() || single_grid.betas.empty()) {
      fail("grid search needs nonempty alpha/beta grids");
    }
  }
  solver.validate();
  (void)grid.specs();
}

bool TrialResult::ok() const {
  return std::all_of(methods.begin(), methods.end(), [](const auto& m) { return m.ok; });
}

KrgModel fit_linear(const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& targets,
                    std::shared_ptr<const Graph> graph, double alpha) {
  auto dict = std::make_shared<const KernelDictionary>(
      KernelDictionary::build(inputs, std::vector<KernelSpec>{{KernelFamily::Linear, 1.0}}));
  return fit(std::move(dict), Eigen::VectorXd::Ones(1), std::move(graph), targets, {alpha, 0.0});
}

KrgModel fit_single_kernel(const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& targets,
                           std::shared_ptr<const Graph> graph, double variance, Regularization reg) {
  auto dict = std::make_shared<const KernelDictionary>(
      KernelDictionary::build(inputs, std::vector<KernelSpec>{{KernelFamily::Gaussian, variance}}));
  return fit(std::move(dict), Eigen::VectorXd::Ones(1), std::move(graph), targets, reg);
}

MultiKernelFit fit_multi_kernel(const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& targets,
                                std::shared_ptr<const Graph> graph, const KernelGrid& grid,
                                Regularization reg, const SolverConfig& solver) {
  auto dict = std::make_shared<const KernelDictionary>(KernelDictionary::build(inputs, grid));
  const ReducedObjective objective(*dict, *graph, targets, reg);
  OptimizeResult opt = optimize(objective, solver);
  KrgModel model = fit(dict, opt.weights.rho, std::move(graph), targets, reg);
  return {std::move(model), std::move(opt)};
}

GridSearchResult grid_search_hyperparams(const TrainingBlock& block, Method method,
                                         const HyperGrid& grid, double single_variance) {
  if (method == Method::MultiKernel) {
    throw Error(ErrorCode::InvalidArgument, "multi-kernel reuses the single-kernel grid winner");
  }
  const std::vector<double> no_beta{0.0};
  const auto& betas = method == Method::Linear || grid.betas.empty() ? no_beta : grid.betas;
  if (grid.alphas.empty()) throw Error(ErrorCode::ConfigError, "empty alpha grid");

  std::vector<double> alphas = grid.alphas;
  std::vector<double> sorted_betas = betas;
  std::sort(alphas.begin(), alphas.end());
  std::sort(sorted_betas.begin(), sorted_betas.end());

  auto dict = std::make_shared<const KernelDictionary>(KernelDictionary::build(
      block.inputs,
      std::vector<KernelSpec>{method == Method::Linear
                                  ? KernelSpec{KernelFamily::Linear, 1.0}
                                  : KernelSpec{KernelFamily::Gaussian, single_variance}}));
  const Eigen::VectorXd rho = Eigen::VectorXd::Ones(1);
  const Eigen::MatrixXd kernel = dict->combine(rho);
  const auto& spectrum = block.graph->spectrum();

  std::optional<GridSearchResult> best;
  for (double alpha : alphas) {
    for (double beta : sorted_betas) {
      double score = 0.0;
      try {
        const Eigen::MatrixXd psi =
            solve_psi_structured(kernel, spectrum, block.noisy_targets, {alpha, beta});
        score = nmse(kernel * psi, block.reference_targets);
      } catch (const Error&) {
        continue;
      }
      // Strict comparison keeps the earliest (smallest alpha, then beta) on ties.
      if (!best || score < best->nmse) best = GridSearchResult{alpha, beta, score};
    }
  }
  if (!best) throw Error(ErrorCode::SingularSystem, "every grid point failed to solve");
  return *best;
}

TrialResult run_trial(const Dataset& dataset, const ExperimentConfig& config, std::uint64_t seed) {
  const Eigen::Index total = dataset.num_samples();
  config.validate(total);

  TrialResult result;
  result.seed = seed;

  std::vector<Eigen::Index> order(static_cast<std::size_t>(total));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  const Eigen::Index n_train = config.n_train;
  const Eigen::Index n_test = config.n_test == 0 ? total - n_train : config.n_test;
  auto take = [&](const Eigen::MatrixXd& src, Eigen::Index offset, Eigen::Index count) {
    Eigen::MatrixXd out(count, src.cols());
    for (Eigen::Index i = 0; i < count; ++i) {
      out.row(i) = src.row(order[static_cast<std::size_t>(offset + i)]);
    }
    return out;
  };

  TrainingBlock block;
  block.inputs = take(dataset.inputs, 0, n_train);
  block.reference_targets = take(dataset.targets, 0, n_train);
  block.graph = dataset.graph;
  const Eigen::MatrixXd test_inputs = take(dataset.inputs, total - n_test, n_test);
  const Eigen::MatrixXd test_targets = take(dataset.targets, total - n_test, n_test);

  try {
    block.noisy_targets = add_noise_snr(block.reference_targets, config.snr_db, mix_seed(seed ^ 0x6E6F697365ULL));
  } catch (const Error& e) {
    for (auto& m : result.methods) m.error = e.what();
    return result;
  }

  result.linear_alpha = config.linear_alpha;
  result.single = config.single;
  if (config.grid_search) {
    try {
      result.linear_alpha = grid_search_hyperparams(block, Method::Linear, config.linear_grid).alpha;
    } catch (const Error& e) {
      result.methods[0].error = e.what();
    }
    try {
      const auto best = grid_search_hyperparams(block, Method::SingleKernel, config.single_grid,
                                                config.single_variance);
      result.single = {best.alpha, best.beta};
    } catch (const Error& e) {
      result.methods[1].error = result.methods[2].error = e.what();
    }
  }

  auto score = [&](Method method, auto&& body) {
    auto& outcome = result.methods[static_cast<std::size_t>(method)];
    if (!outcome.error.empty()) return;
    try {
      outcome.nmse = nmse(body(), test_targets);
      outcome.ok = std::isfinite(outcome.nmse);
      if (!outcome.ok) outcome.error = "non-finite NMSE";
    } catch (const Error& e) {
      outcome.error = e.what();
    }
  };

  score(Method::Linear, [&] {
    return fit_linear(block.inputs, block.noisy_targets, block.graph, result.linear_alpha)
        .predict_rows(test_inputs);
  });
  score(Method::SingleKernel, [&] {
    return fit_single_kernel(block.inputs, block.noisy_targets, block.graph,
                             config.single_variance, result.single)
        .predict_rows(test_inputs);
  });
  score(Method::MultiKernel, [&] {
    auto fitted = fit_multi_kernel(block.inputs, block.noisy_targets, block.graph, config.grid,
                                   result.single, config.solver);
    result.rho = fitted.optimization.weights.rho;
    result.iterations = fitted.optimization.trace.iterations();
    result.converged = fitted.optimization.trace.status == TraceStatus::Converged;
    return fitted.model.predict_rows(test_inputs);
  });
  return result;
}

AggregateReport monte_carlo(const Dataset& dataset, const ExperimentConfig& config) {
  config.validate(dataset.num_samples());
  const auto count = static_cast<std::size_t>(config.n_realizations);
  std::vector<TrialResult> trials(count);

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      trials[i] = run_trial(dataset, config, realization_seed(config.master_seed, i));
    }
  };
  const auto workers = std::min<std::size_t>(static_cast<std::size_t>(config.threads), count);
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < workers; ++t) pool.emplace_back(worker);
  }

  AggregateReport report;
  report.n_train = config.n_train;
  report.n_realizations = config.n_realizations;
  for (const auto& spec : config.grid.specs()) report.kernel_parameters.push_back(spec.parameter);

  int failed = 0;
  int mkl_runs = 0;
  int converged = 0;
  double iterations = 0.0;
  for (const auto& trial : trials) {
    if (!trial.ok()) ++failed;
    if (trial.outcome(Method::MultiKernel).ok) {
      ++mkl_runs;
      iterations += trial.iterations;
      converged += trial.converged ? 1 : 0;
      if (report.representative_rho.size() == 0) report.representative_rho = trial.rho;
    }
  }
  for (Method m : kMethods) {
    auto& s = report.methods[static_cast<std::size_t>(m)];
    double sum = 0.0;
    for (const auto& trial : trials) {
      if (trial.outcome(m).ok) {
        sum += trial.outcome(m).nmse;
        ++s.successes;
      }
    }
    if (s.successes == 0) continue;
    s.mean = sum / s.successes;
    double var = 0.0;
    for (const auto& trial : trials) {
      if (trial.outcome(m).ok) var += std::pow(trial.outcome(m).nmse - s.mean, 2);
    }
    s.stddev = s.successes > 1 ? std::sqrt(var / (s.successes - 1)) : 0.0;
  }
  if (mkl_runs > 0) {
    report.mean_iterations = iterations / mkl_runs;
    report.converged_fraction = static_cast<double>(converged) / mkl_runs;
  }
  report.trials = std::move(trials);

  if (2 * failed > config.n_realizations) {
    std::ostringstream msg;
    msg << failed << " of " << config.n_realizations << " trials failed";
    throw ExperimentError(msg.str(), std::move(report));
  }
  return report;
}

}  // namespace graphkern
