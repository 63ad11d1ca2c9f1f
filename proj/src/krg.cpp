#include "graphkern/krg.hpp"

#include <cmath>
#include <sstream>
#include <string>

#include "graphkern/error.hpp"

namespace graphkern {

namespace {

void check_shapes(const Eigen::MatrixXd& kernel, Eigen::Index num_nodes,
                  const Eigen::MatrixXd& targets, Regularization reg) {
  if (kernel.rows() != kernel.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "kernel matrix is not square");
  }
  if (targets.rows() != kernel.rows() || targets.cols() != num_nodes) {
    std::ostringstream msg;
    msg << "targets are " << targets.rows() << "x" << targets.cols() << ", expected "
        << kernel.rows() << "x" << num_nodes;
    throw Error(ErrorCode::DimensionMismatch, msg.str());
  }
  if (!(reg.alpha >= 0.0) || !(reg.beta >= 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "alpha and beta must be nonnegative");
  }
}

[[noreturn]] void throw_singular(double cond) {
  std::ostringstream msg;
  msg << "condition estimate " << cond << " exceeds " << kMaxConditionNumber
      << "; increase alpha";
  throw Error(ErrorCode::SingularSystem, msg.str());
}

}  // namespace

Eigen::MatrixXd kron(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  Eigen::MatrixXd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

Eigen::VectorXd vec(const Eigen::MatrixXd& m) {
  return Eigen::Map<const Eigen::VectorXd>(m.data(), m.size());
}

Eigen::MatrixXd unvec(const Eigen::VectorXd& v, Eigen::Index rows, Eigen::Index cols) {
  return Eigen::Map<const Eigen::MatrixXd>(v.data(), rows, cols);
}

Eigen::MatrixXd krg_system_matrix(const Eigen::MatrixXd& kernel, const Eigen::MatrixXd& laplacian,
                                  Regularization reg) {
  const Eigen::Index n = kernel.rows();
  const Eigen::Index m = laplacian.rows();
  const Eigen::MatrixXd shifted = kernel + reg.alpha * Eigen::MatrixXd::Identity(n, n);
  return kron(Eigen::MatrixXd::Identity(m, m), shifted) + reg.beta * kron(laplacian, kernel);
}

Eigen::MatrixXd solve_psi_dense(const Eigen::MatrixXd& kernel, const Graph& graph,
                                const Eigen::MatrixXd& targets, Regularization reg) {
  check_shapes(kernel, graph.num_nodes(), targets, reg);
  const Eigen::MatrixXd system = krg_system_matrix(kernel, graph.laplacian(), reg);
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(system);
  const double rcond = lu.rcond();
  if (!(rcond * kMaxConditionNumber >= 1.0)) throw_singular(rcond > 0.0 ? 1.0 / rcond : INFINITY);
  const Eigen::VectorXd solution = lu.solve(vec(targets));
  return unvec(solution, targets.rows(), targets.cols());
}

Eigen::MatrixXd solve_psi_structured(const Eigen::MatrixXd& kernel, const LaplacianSpectrum& spectrum,
                                     const Eigen::MatrixXd& targets, Regularization reg) {
  check_shapes(kernel, spectrum.eigenvalues.size(), targets, reg);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(kernel);
  if (eig.info() != Eigen::Success) {
    throw Error(ErrorCode::ConvergenceFailure, "kernel eigensolver did not converge");
  }
  const Eigen::VectorXd sigma = eig.eigenvalues().cwiseMax(0.0);
  const Eigen::VectorXd scale =
      Eigen::VectorXd::Ones(spectrum.eigenvalues.size()) + reg.beta * spectrum.eigenvalues;

  // denom(i, m) is the i-th eigenvalue of the m-th column system.
  const Eigen::MatrixXd denom =
      (sigma * scale.transpose()).array() + reg.alpha;
  const double lo = denom.minCoeff();
  const double hi = denom.maxCoeff();
  if (!(lo > 0.0) || hi / lo > kMaxConditionNumber) throw_singular(lo > 0.0 ? hi / lo : INFINITY);

  const Eigen::MatrixXd& v = eig.eigenvectors();
  const Eigen::MatrixXd& u = spectrum.eigenvectors;
  const Eigen::MatrixXd rotated = v.transpose() * targets * u;
  return v * (rotated.array() / denom.array()).matrix() * u.transpose();
}

KrgModel::KrgModel(std::shared_ptr<const KernelDictionary> dict, Eigen::VectorXd rho,
                   std::shared_ptr<const Graph> graph, Eigen::MatrixXd psi, Regularization reg)
    : dict_(std::move(dict)),
      rho_(std::move(rho)),
      graph_(std::move(graph)),
      psi_(std::move(psi)),
      reg_(reg) {}

Eigen::VectorXd KrgModel::predict(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  return psi_.transpose() * dict_->kernel_vector(rho_, x);
}

Eigen::MatrixXd KrgModel::predict_rows(const Eigen::MatrixXd& inputs) const {
  return dict_->cross_kernel(rho_, inputs).transpose() * psi_;
}

KrgModel solve_dense(std::shared_ptr<const KernelDictionary> dict, const Eigen::VectorXd& rho,
                     std::shared_ptr<const Graph> graph, const Eigen::MatrixXd& targets,
                     Regularization reg) {
  Eigen::MatrixXd psi = solve_psi_dense(dict->combine(rho), *graph, targets, reg);
  return KrgModel(std::move(dict), rho, std::move(graph), std::move(psi), reg);
}

KrgModel solve_structured(std::shared_ptr<const KernelDictionary> dict, const Eigen::VectorXd& rho,
                          std::shared_ptr<const Graph> graph, const Eigen::MatrixXd& targets,
                          Regularization reg) {
  Eigen::MatrixXd psi = solve_psi_structured(dict->combine(rho), graph->spectrum(), targets, reg);
  return KrgModel(std::move(dict), rho, std::move(graph), std::move(psi), reg);
}

KrgModel fit(std::shared_ptr<const KernelDictionary> dict, const Eigen::VectorXd& rho,
             std::shared_ptr<const Graph> graph, const Eigen::MatrixXd& targets, Regularization reg) {
  if (dict->num_samples() * graph->num_nodes() > kDenseSizeLimit) {
    return solve_structured(std::move(dict), rho, std::move(graph), targets, reg);
  }
  return solve_dense(std::move(dict), rho, std::move(graph), targets, reg);
}

KrgObjective krg_objective(const Eigen::MatrixXd& kernel, const Eigen::MatrixXd& laplacian,
                           const Eigen::MatrixXd& psi, const Eigen::MatrixXd& targets,
                           Regularization reg) {
  if (psi.rows() != kernel.rows() || psi.cols() != laplacian.rows() ||
      targets.rows() != psi.rows() || targets.cols() != psi.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "objective operands have inconsistent shapes");
  }
  const Eigen::MatrixXd kpsi = kernel * psi;
  const double cross = (targets.array() * kpsi.array()).sum();
  const double fit = kpsi.squaredNorm();
  const double ridge = (psi.array() * kpsi.array()).sum();
  const double smooth = (kpsi.array() * (kpsi * laplacian).array()).sum();
  KrgObjective out;
  out.reduced = -2.0 * cross + fit + reg.alpha * ridge + reg.beta * smooth;
  out.full = targets.squaredNorm() + out.reduced;
  return out;
}

KrgObjective krg_objective(const KrgModel& model, const Eigen::MatrixXd& targets) {
  return krg_objective(model.kernel(), model.graph().laplacian(), model.psi(), targets,
                       model.regularization());
}

}  // namespace graphkern
