#pragma once

#include <memory>

#include <Eigen/Dense>

#include "graphkern/graph.hpp"
#include "graphkern/kernels.hpp"

namespace graphkern {

/// Ridge weight alpha on tr(W^T W) and graph-smoothness weight beta on sum_n l(y_n).
struct Regularization {
  double alpha = 0.1;
  double beta = 0.0;
};

/// Systems whose reciprocal condition estimate falls below this are rejected as singular.
inline constexpr double kMaxConditionNumber = 1e12;

/// Above this M*N the fit() entry point uses the structured path.
inline constexpr Eigen::Index kDenseSizeLimit = 2000;

/// Kronecker product a (x) b.
Eigen::MatrixXd kron(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

/// The MN x MN matrix I_M (x) (K + alpha I_N) + beta L (x) K acting on column-stacked vec(Psi).
Eigen::MatrixXd krg_system_matrix(const Eigen::MatrixXd& kernel, const Eigen::MatrixXd& laplacian,
                                  Regularization reg);

/// Coefficients Psi (N x M) from a pivoted direct solve of the Kronecker system.
/// Throws SingularSystem, DimensionMismatch.
Eigen::MatrixXd solve_psi_dense(const Eigen::MatrixXd& kernel, const Graph& graph,
                                const Eigen::MatrixXd& targets, Regularization reg);

/// Same Psi via L = U diag(lambda) U^T: column m of Psi U solves
/// ((1 + beta lambda_m) K + alpha I) psi_m = (T U)_m. K is diagonalized once.
/// Throws SingularSystem, DimensionMismatch.
Eigen::MatrixXd solve_psi_structured(const Eigen::MatrixXd& kernel, const LaplacianSpectrum& spectrum,
                                     const Eigen::MatrixXd& targets, Regularization reg);

/// Fitted regression state. Predictions are y(x) = Psi^T k(x).
class KrgModel {
 public:
  KrgModel(std::shared_ptr<const KernelDictionary> dict, Eigen::VectorXd rho,
           std::shared_ptr<const Graph> graph, Eigen::MatrixXd psi, Regularization reg);

  const Eigen::MatrixXd& psi() const { return psi_; }
  const Eigen::VectorXd& rho() const { return rho_; }
  Regularization regularization() const { return reg_; }
  const KernelDictionary& dictionary() const { return *dict_; }
  const std::shared_ptr<const KernelDictionary>& dictionary_ptr() const { return dict_; }
  const Graph& graph() const { return *graph_; }

  /// Combined kernel over the training inputs.
  Eigen::MatrixXd kernel() const { return dict_->combine(rho_); }

  Eigen::VectorXd predict(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  /// One prediction per row of `inputs`, returned as rows.
  Eigen::MatrixXd predict_rows(const Eigen::MatrixXd& inputs) const;

 private:
  std::shared_ptr<const KernelDictionary> dict_;
  Eigen::VectorXd rho_;
  std::shared_ptr<const Graph> graph_;
  Eigen::MatrixXd psi_;
  Regularization reg_;
};

KrgModel solve_dense(std::shared_ptr<const KernelDictionary> dict, const Eigen::VectorXd& rho,
                     std::shared_ptr<const Graph> graph, const Eigen::MatrixXd& targets,
                     Regularization reg);

KrgModel solve_structured(std::shared_ptr<const KernelDictionary> dict, const Eigen::VectorXd& rho,
                          std::shared_ptr<const Graph> graph, const Eigen::MatrixXd& targets,
                          Regularization reg);

/// Dense path for small systems, structured path when M*N exceeds kDenseSizeLimit.
KrgModel fit(std::shared_ptr<const KernelDictionary> dict, const Eigen::VectorXd& rho,
             std::shared_ptr<const Graph> graph, const Eigen::MatrixXd& targets, Regularization reg);

/// Value of the dual training objective. `reduced` omits the constant tr(T^T T).
struct KrgObjective {
  double full = 0.0;
  double reduced = 0.0;
};

/// tr(T^T T) - 2 tr(T^T K Psi) + tr(Psi^T K K Psi) + alpha tr(Psi^T K Psi)
///   + beta tr(Psi^T K K Psi L)
KrgObjective krg_objective(const Eigen::MatrixXd& kernel, const Eigen::MatrixXd& laplacian,
                           const Eigen::MatrixXd& psi, const Eigen::MatrixXd& targets,
                           Regularization reg);

KrgObjective krg_objective(const KrgModel& model, const Eigen::MatrixXd& targets);

/// vec(Psi) column-stacked, and its inverse.
Eigen::VectorXd vec(const Eigen::MatrixXd& m);
Eigen::MatrixXd unvec(const Eigen::VectorXd& v, Eigen::Index rows, Eigen::Index cols);

}  // namespace graphkern
