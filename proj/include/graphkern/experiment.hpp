#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "graphkern/error.hpp"
#include "graphkern/graph.hpp"
#include "graphkern/kernels.hpp"
#include "graphkern/krg.hpp"
#include "graphkern/mkl.hpp"

namespace graphkern {

/// Paired samples: row n of `inputs` predicts row n of `targets` (clean values).
struct Dataset {
  Eigen::MatrixXd inputs;
  Eigen::MatrixXd targets;
  std::shared_ptr<const Graph> graph;

  Eigen::Index num_samples() const { return inputs.rows(); }
};

/// Consecutive-step pairing of a steps x M series: x_n = row n, t_n = row n + 1.
Dataset dataset_from_series(const Eigen::MatrixXd& series, std::shared_ptr<const Graph> graph);

/// Random geometric graph with samples whose targets are smooth graph signals depending
/// nonlinearly on the input: t(x) = offset * g_0 + sum_k exp(-|x - c_k|^2 / (2 w^2)) g_k.
/// Inputs and every g_k are graph-low-pass signals on the same M nodes.
struct SyntheticScenario {
  int num_nodes = 45;
  int num_samples = 60;
  /// Latitude/longitude box the nodes are scattered in.
  double lat_min = 55.0, lat_max = 69.0, lon_min = 11.0, lon_max = 24.0;
  /// Graph low-pass strength c in (I + c L)^{-1}; larger is smoother.
  double graph_smoothing = 0.1;
  /// RMS norm |x| of the inputs.
  double input_norm = 1.25;
  int num_bumps = 4;
  /// Width w^2 of the input-space bumps.
  double bump_variance = 1.0;
  /// Weight of the input-independent mean field g_0.
  double offset = 1.0;
  std::uint64_t seed = 20151001;
};

struct SyntheticData {
  NodeCoordinates coords;
  Dataset dataset;
};

SyntheticData generate_synthetic(const SyntheticScenario& scenario);

/// Stable 64-bit mix (splitmix64 finalizer).
std::uint64_t mix_seed(std::uint64_t x);
/// Seed of trial `index` under `master`.
std::uint64_t realization_seed(std::uint64_t master, std::uint64_t index);

/// T + E with E i.i.d. N(0, P / 10^(snr_db/10)), P the mean square of T. Throws ZeroSignal.
Eigen::MatrixXd add_noise_snr(const Eigen::MatrixXd& clean, double snr_db, std::uint64_t seed);

/// sum |pred - truth|^2 / sum |truth|^2 over the whole block. Throws DimensionMismatch, ZeroTruth.
double nmse(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& truth);

enum class Method { Linear = 0, SingleKernel = 1, MultiKernel = 2 };
inline constexpr std::array<Method, 3> kMethods{Method::Linear, Method::SingleKernel,
                                                Method::MultiKernel};
std::string_view to_string(Method method);

struct HyperGrid {
  std::vector<double> alphas;
  std::vector<double> betas;
};

struct ExperimentConfig {
  double snr_db = 0.0;
  int n_train = 30;
  /// Size of the held-out block; 0 uses every sample not drawn for training.
  int n_test = 30;
  int n_realizations = 100;
  KernelGrid grid{KernelFamily::Gaussian, 0.01, 10.0, 100};
  /// Variance of the single-kernel baseline.
  double single_variance = 1.0;

  /// When set, each trial picks the hyperparameters on its training block; otherwise the fixed
  /// values below are used.
  bool grid_search = true;
  HyperGrid linear_grid{{0.1, 0.3, 1.0, 4.3, 10.0, 30.0}, {0.0}};
  HyperGrid single_grid{{0.01, 0.02, 0.03, 0.06, 0.1, 0.3, 1.0, 3.0, 10.0}, {0.0, 0.1, 0.5, 1.5, 5.5}};
  double linear_alpha = 4.3;
  Regularization single{0.1, 5.5};

  SolverConfig solver;
  std::uint64_t master_seed = 1;
  int threads = 1;

  /// Throws ConfigError.
  void validate(Eigen::Index num_samples) const;
};

struct MethodOutcome {
  bool ok = false;
  double nmse = 0.0;
  std::string error;
};

struct TrialResult {
  std::uint64_t seed = 0;
  std::array<MethodOutcome, 3> methods;
  double linear_alpha = 0.0;
  Regularization single;
  Eigen::VectorXd rho;  // multi-kernel only
  int iterations = 0;
  bool converged = false;

  const MethodOutcome& outcome(Method m) const { return methods[static_cast<std::size_t>(m)]; }
  bool ok() const;
};

/// Fits on (inputs, noisy_targets); `reference_targets` are the clean values used for scoring.
struct TrainingBlock {
  Eigen::MatrixXd inputs;
  Eigen::MatrixXd noisy_targets;
  Eigen::MatrixXd reference_targets;
  std::shared_ptr<const Graph> graph;
};

struct GridSearchResult {
  double alpha = 0.0;
  double beta = 0.0;
  double nmse = 0.0;
};

/// Training-block NMSE of every (alpha, beta) on the grid against the clean training targets;
/// returns the argmin, ties to the smaller alpha then the smaller beta. Linear ignores beta.
GridSearchResult grid_search_hyperparams(const TrainingBlock& block, Method method,
                                         const HyperGrid& grid, double single_variance = 1.0);

/// Linear-kernel ridge regression fit (phi(x) = x, no graph term).
KrgModel fit_linear(const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& targets,
                    std::shared_ptr<const Graph> graph, double alpha);

/// Single Gaussian kernel regression over the graph.
KrgModel fit_single_kernel(const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& targets,
                           std::shared_ptr<const Graph> graph, double variance, Regularization reg);

struct MultiKernelFit {
  KrgModel model;
  OptimizeResult optimization;
};

/// Learns rho on the dictionary over `inputs`, then refits Psi at the learned weights.
MultiKernelFit fit_multi_kernel(const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& targets,
                                std::shared_ptr<const Graph> graph, const KernelGrid& grid,
                                Regularization reg, const SolverConfig& solver);

/// One random partition plus noise draw, scored for every method. Method failures are recorded,
/// not thrown.
TrialResult run_trial(const Dataset& dataset, const ExperimentConfig& config, std::uint64_t seed);

struct MethodSummary {
  double mean = 0.0;
  double stddev = 0.0;
  int successes = 0;
};

struct AggregateReport {
  int n_train = 0;
  int n_realizations = 0;
  std::array<MethodSummary, 3> methods;
  double mean_iterations = 0.0;
  double converged_fraction = 0.0;
  Eigen::VectorXd representative_rho;
  std::vector<double> kernel_parameters;
  std::vector<TrialResult> trials;

  const MethodSummary& summary(Method m) const { return methods[static_cast<std::size_t>(m)]; }
};

class ExperimentError : public Error {
 public:
  ExperimentError(const std::string& message, AggregateReport partial)
      : Error(ErrorCode::FailedTrialsExceedHalf, message), partial_(std::move(partial)) {}
  const AggregateReport& partial() const { return partial_; }

 private:
  AggregateReport partial_;
};

/// n_realizations trials with seeds from the master seed, optionally on several threads.
/// Output depends only on (dataset, config). Throws ExperimentError when more than half fail.
AggregateReport monte_carlo(const Dataset& dataset, const ExperimentConfig& config);

}  // namespace graphkern
