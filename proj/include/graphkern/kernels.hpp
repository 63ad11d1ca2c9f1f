#pragma once

#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace graphkern {

enum class KernelFamily { Gaussian, Linear };

std::string_view to_string(KernelFamily family);
KernelFamily kernel_family_from_string(std::string_view name);

/// A basis kernel. For Gaussian the parameter is the variance sigma^2:
/// k(x, x') = exp(-|x - x'|^2 / (2 sigma^2)). Linear ignores it: k(x, x') = x^T x'.
struct KernelSpec {
  KernelFamily family = KernelFamily::Gaussian;
  double parameter = 1.0;

  double operator()(const Eigen::Ref<const Eigen::VectorXd>& x,
                    const Eigen::Ref<const Eigen::VectorXd>& x2) const;
};

/// Throws DimensionMismatch when the vectors differ in length.
double kernel_eval(const KernelSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& x,
                   const Eigen::Ref<const Eigen::VectorXd>& x2);

/// Uniform grid of `count` kernel parameters over [lo, hi].
struct KernelGrid {
  KernelFamily family = KernelFamily::Gaussian;
  double lo = 0.01;
  double hi = 10.0;
  int count = 100;

  /// Throws InvalidSpan.
  std::vector<KernelSpec> specs() const;
};

/// S basis kernel matrices over N training inputs (rows of X).
class KernelDictionary {
 public:
  /// Throws InvalidSpan, EmptyTrainingSet.
  static KernelDictionary build(const Eigen::MatrixXd& inputs, const KernelGrid& grid);
  static KernelDictionary build(const Eigen::MatrixXd& inputs, std::vector<KernelSpec> specs);

  Eigen::Index size() const { return static_cast<Eigen::Index>(specs_.size()); }
  Eigen::Index num_samples() const { return inputs_.rows(); }
  Eigen::Index input_dim() const { return inputs_.cols(); }

  const std::vector<KernelSpec>& specs() const { return specs_; }
  const KernelSpec& spec(Eigen::Index s) const { return specs_[static_cast<std::size_t>(s)]; }
  const Eigen::MatrixXd& inputs() const { return inputs_; }
  const Eigen::MatrixXd& matrix(Eigen::Index s) const {
    return matrices_[static_cast<std::size_t>(s)];
  }

  /// K = sum_s rho_s K_s. Throws LengthMismatch, NegativeWeight.
  Eigen::MatrixXd combine(const Eigen::Ref<const Eigen::VectorXd>& rho) const;

  /// Entry n = sum_s rho_s k_s(x_n, x). Throws LengthMismatch, NegativeWeight, DimensionMismatch.
  Eigen::VectorXd kernel_vector(const Eigen::Ref<const Eigen::VectorXd>& rho,
                                const Eigen::Ref<const Eigen::VectorXd>& x) const;

  /// N x P cross kernel between training inputs and the rows of `queries`.
  Eigen::MatrixXd cross_kernel(const Eigen::Ref<const Eigen::VectorXd>& rho,
                               const Eigen::MatrixXd& queries) const;

 private:
  KernelDictionary(Eigen::MatrixXd inputs, std::vector<KernelSpec> specs);
  void check_weights(const Eigen::Ref<const Eigen::VectorXd>& rho) const;

  Eigen::MatrixXd inputs_;
  std::vector<KernelSpec> specs_;
  std::vector<Eigen::MatrixXd> matrices_;
};

/// Squared Euclidean distances between rows of a and rows of b.
Eigen::MatrixXd squared_distances(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

}  // namespace graphkern
