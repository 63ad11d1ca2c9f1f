#include "graphkern/mkl.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <ostream>
#include <string>

namespace graphkern {

double weight_norm(const Eigen::Ref<const Eigen::VectorXd>& rho, NormType q) {
  return q == NormType::L1 ? rho.lpNorm<1>() : rho.norm();
}

Eigen::VectorXd project(const Eigen::Ref<const Eigen::VectorXd>& s, double radius, NormType q) {
  if (!(radius > 0.0) || !std::isfinite(radius)) {
    throw Error(ErrorCode::InvalidArgument, "projection radius must be positive");
  }
  Eigen::VectorXd clipped = s.cwiseMax(0.0);

  if (q == NormType::L2) {
    const double norm = clipped.norm();
    if (norm > radius) clipped *= radius / norm;
    return clipped;
  }

  if (clipped.sum() <= radius) return clipped;

  // Largest k with u_k > (sum_{j<=k} u_j - R) / k over the descending sort u gives the threshold.
  std::vector<double> sorted(clipped.data(), clipped.data() + clipped.size());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double cumulative = 0.0;
  double tau = 0.0;
  for (std::size_t k = 0; k < sorted.size(); ++k) {
    cumulative += sorted[k];
    const double candidate = (cumulative - radius) / static_cast<double>(k + 1);
    if (sorted[k] - candidate > 0.0) tau = candidate;
  }
  Eigen::VectorXd out = (clipped.array() - tau).cwiseMax(0.0).matrix();
  // Round-off can leave the sum a few ulps above the radius.
  const double total = out.sum();
  if (total > radius) out *= radius / total;
  return out;
}

ReducedObjective::ReducedObjective(const KernelDictionary& dict, const Graph& graph,
                                   Eigen::MatrixXd targets, Regularization reg)
    : dict_(dict), graph_(graph), targets_(std::move(targets)), reg_(reg) {
  if (targets_.rows() != dict_.num_samples() || targets_.cols() != graph_.num_nodes()) {
    throw Error(ErrorCode::DimensionMismatch, "targets do not match dictionary and graph");
  }
}

ReducedObjective::Evaluation ReducedObjective::evaluate(
    const Eigen::Ref<const Eigen::VectorXd>& rho) const {
  const Eigen::MatrixXd kernel = dict_.combine(rho);
  Evaluation out;
  out.psi = solve_psi_structured(kernel, graph_.spectrum(), targets_, reg_);
  out.gamma = -(targets_.array() * (kernel * out.psi).array()).sum();

  // d gamma / d rho_s = -alpha tr(Psi^T K_s Psi) = -alpha <K_s, Psi Psi^T>.
  const Eigen::MatrixXd gram = out.psi * out.psi.transpose();
  out.gradient.resize(dict_.size());
  for (Eigen::Index s = 0; s < dict_.size(); ++s) {
    out.gradient(s) = -reg_.alpha * (dict_.matrix(s).array() * gram.array()).sum();
  }
  return out;
}

double ReducedObjective::gamma(const Eigen::Ref<const Eigen::VectorXd>& rho) const {
  const Eigen::MatrixXd kernel = dict_.combine(rho);
  const Eigen::MatrixXd psi = solve_psi_structured(kernel, graph_.spectrum(), targets_, reg_);
  return -(targets_.array() * (kernel * psi).array()).sum();
}

Eigen::VectorXd ReducedObjective::gradient(const Eigen::Ref<const Eigen::VectorXd>& rho) const {
  return evaluate(rho).gradient;
}

double gamma_reference(const KernelDictionary& dict, const Graph& graph,
                       const Eigen::MatrixXd& targets, const Eigen::VectorXd& rho,
                       Regularization reg) {
  const Eigen::MatrixXd kernel = dict.combine(rho);
  const Eigen::Index m = graph.num_nodes();
  const Eigen::MatrixXd system = krg_system_matrix(kernel, graph.laplacian(), reg);
  const Eigen::MatrixXd lifted = kron(Eigen::MatrixXd::Identity(m, m), kernel);
  const Eigen::MatrixXd b = -lifted * system.inverse();
  const Eigen::VectorXd t = vec(targets);
  return t.dot(b * t);
}

Eigen::MatrixXd grammian_matrix(const KernelDictionary& dict, const Graph& graph,
                                const Eigen::MatrixXd& psi, double beta) {
  const auto& spec = graph.spectrum();
  const Eigen::VectorXd inv_sqrt =
      (1.0 + beta * spec.eigenvalues.array()).rsqrt().matrix();
  const Eigen::MatrixXd whiten =
      spec.eigenvectors * inv_sqrt.asDiagonal() * spec.eigenvectors.transpose();
  const Eigen::MatrixXd p = psi * whiten;

  Eigen::MatrixXd d(p.size(), dict.size());
  for (Eigen::Index s = 0; s < dict.size(); ++s) {
    d.col(s) = vec(dict.matrix(s) * p);
  }
  return d.transpose() * d;
}

void SolverConfig::validate() const {
  if (!(mu0 > 0.0)) throw Error(ErrorCode::ConfigError, "mu0 must be positive");
  if (max_iterations < 1) throw Error(ErrorCode::ConfigError, "max_iterations must be >= 1");
  if (!(epsilon > 0.0)) throw Error(ErrorCode::ConfigError, "epsilon must be positive");
  if (!(radius > 0.0)) throw Error(ErrorCode::ConfigError, "radius must be positive");
}

void OptimizerTrace::write_csv(std::ostream& os) const {
  const auto old_precision = os.precision(17);
  os << "iteration,gamma,step,delta,norm\n";
  for (const auto& r : records) {
    os << r.iteration << ',' << r.gamma << ',' << r.step << ',' << r.delta_sq << ',' << r.norm
       << '\n';
  }
  os.precision(old_precision);
}

OptimizeResult optimize(const ReducedObjective& objective, const SolverConfig& config) {
  config.validate();
  const Eigen::Index num_kernels = objective.dictionary().size();

  OptimizerTrace trace;
  Eigen::VectorXd rho = Eigen::VectorXd::Zero(num_kernels);
  Eigen::VectorXd z_prev = rho;
  double lambda_prev = 1.0;

  for (int i = 1; i <= config.max_iterations; ++i) {
    ReducedObjective::Evaluation eval;
    try {
      eval = objective.evaluate(rho);
    } catch (const Error& e) {
      throw OptimizerError(e, std::move(trace));
    }

    const double step = config.mu0 / i;
    const Eigen::VectorXd z = project(rho - step * eval.gradient, config.radius, config.q);
    const double lambda = (1.0 + std::sqrt(1.0 + 4.0 * lambda_prev * lambda_prev)) / 2.0;
    const double nu = (lambda_prev - 1.0) / lambda;

    Eigen::VectorXd next;
    if (config.momentum == MomentumRule::Convex) {
      next = (1.0 - nu) * z + nu * rho;
    } else {
      // The extrapolated point can leave the feasible set; pull it back so gamma stays defined.
      next = project(z + nu * (z - z_prev), config.radius, config.q);
    }

    IterationRecord rec;
    rec.iteration = i;
    rec.gamma = eval.gamma;
    rec.delta_sq = (next - rho).squaredNorm();
    rec.step = step;
    rec.norm = weight_norm(next, config.q);
    trace.records.push_back(rec);

    rho = std::move(next);
    z_prev = z;
    lambda_prev = lambda;

    if (rec.delta_sq <= config.epsilon) {
      trace.status = TraceStatus::Converged;
      break;
    }
  }

  OptimizeResult result;
  result.weights = {project(rho, config.radius, config.q), config.q, config.radius};
  try {
    result.final_gamma = objective.gamma(result.weights.rho);
  } catch (const Error& e) {
    throw OptimizerError(e, std::move(trace));
  }
  result.trace = std::move(trace);
  return result;
}

}  // namespace graphkern
