#pragma once

#include <iosfwd>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "graphkern/error.hpp"
#include "graphkern/graph.hpp"
#include "graphkern/kernels.hpp"
#include "graphkern/krg.hpp"

namespace graphkern {

enum class NormType { L1 = 1, L2 = 2 };

double weight_norm(const Eigen::Ref<const Eigen::VectorXd>& rho, NormType q);

/// Euclidean projection of s onto {z >= 0, |z|_q <= radius}. Throws InvalidArgument for radius <= 0.
///
/// For q = 1 the result is max(s - tau, 0) with tau found by sorting (O(S log S)); for q = 2 the
/// clipped vector is rescaled onto the ball.
Eigen::VectorXd project(const Eigen::Ref<const Eigen::VectorXd>& s, double radius, NormType q);

/// Kernel weights with their constraint set.
struct MklWeights {
  Eigen::VectorXd rho;
  NormType q = NormType::L1;
  double radius = 5.0;
};

/// The reduced objective gamma(rho) = -tr(T^T K Psi), Psi the optimal coefficients at
/// K = sum_s rho_s K_s, and its gradient. Everything is evaluated in the Laplacian
/// eigenbasis; the MN x MN matrix is never formed.
class ReducedObjective {
 public:
  struct Evaluation {
    double gamma = 0.0;
    Eigen::VectorXd gradient;
    Eigen::MatrixXd psi;
  };

  /// The dictionary and graph must outlive this object.
  ReducedObjective(const KernelDictionary& dict, const Graph& graph, Eigen::MatrixXd targets,
                   Regularization reg);

  Evaluation evaluate(const Eigen::Ref<const Eigen::VectorXd>& rho) const;
  double gamma(const Eigen::Ref<const Eigen::VectorXd>& rho) const;
  Eigen::VectorXd gradient(const Eigen::Ref<const Eigen::VectorXd>& rho) const;

  const KernelDictionary& dictionary() const { return dict_; }
  const Graph& graph() const { return graph_; }
  const Eigen::MatrixXd& targets() const { return targets_; }
  Regularization regularization() const { return reg_; }

 private:
  const KernelDictionary& dict_;
  const Graph& graph_;
  Eigen::MatrixXd targets_;
  Regularization reg_;
};

/// vec(T)^T B(rho) vec(T) with B(rho) = -(I (x) K)[I (x) (K + alpha I) + beta L (x) K]^{-1}
/// assembled densely. Slow; for cross-checking ReducedObjective.
double gamma_reference(const KernelDictionary& dict, const Graph& graph,
                       const Eigen::MatrixXd& targets, const Eigen::VectorXd& rho,
                       Regularization reg);

/// S x S matrix C(r, s) = <K_r Psi (I + beta L)^{-1/2}, K_s Psi (I + beta L)^{-1/2}>, the quadratic
/// part of the joint objective as a function of rho at fixed Psi.
Eigen::MatrixXd grammian_matrix(const KernelDictionary& dict, const Graph& graph,
                                const Eigen::MatrixXd& psi, double beta);

enum class MomentumRule {
  /// rho(i) = (1 - nu) z(i) + nu rho(i-1)
  Convex,
  /// rho(i) = z(i) + nu (z(i) - z(i-1))
  Extrapolate,
};

struct SolverConfig {
  double mu0 = 0.01;
  int max_iterations = 500;
  double epsilon = 1e-4;
  double radius = 5.0;
  NormType q = NormType::L1;
  MomentumRule momentum = MomentumRule::Convex;

  /// Throws ConfigError.
  void validate() const;
};

struct IterationRecord {
  int iteration = 0;
  double gamma = 0.0;   // at rho(i-1), where the gradient was taken
  double delta_sq = 0.0;  // |rho(i) - rho(i-1)|^2
  double step = 0.0;
  double norm = 0.0;  // |rho(i)|_q
};

enum class TraceStatus { Converged, MaxIterations };

struct OptimizerTrace {
  std::vector<IterationRecord> records;
  TraceStatus status = TraceStatus::MaxIterations;

  int iterations() const { return static_cast<int>(records.size()); }
  /// Columns: iteration,gamma,step,delta,norm.
  void write_csv(std::ostream& os) const;
};

struct OptimizeResult {
  MklWeights weights;
  OptimizerTrace trace;
  double final_gamma = 0.0;
};

/// Thrown when a gradient evaluation fails partway through optimize().
class OptimizerError : public Error {
 public:
  OptimizerError(const Error& cause, OptimizerTrace trace)
      : Error(cause.code(), cause.what()), trace_(std::move(trace)) {}
  const OptimizerTrace& trace() const { return trace_; }

 private:
  OptimizerTrace trace_;
};

/// Accelerated projected gradient descent on gamma starting from rho = 0 with step mu0 / i.
/// Stops once |rho(i) - rho(i-1)|^2 <= epsilon or after max_iterations.
OptimizeResult optimize(const ReducedObjective& objective, const SolverConfig& config);

}  // namespace graphkern
