#include "graphkern/kernels.hpp"

#include <cmath>
#include <string>

#include "graphkern/error.hpp"

namespace graphkern {

std::string_view to_string(KernelFamily family) {
  return family == KernelFamily::Gaussian ? "gaussian" : "linear";
}

KernelFamily kernel_family_from_string(std::string_view name) {
  if (name == "gaussian") return KernelFamily::Gaussian;
  if (name == "linear") return KernelFamily::Linear;
  throw Error(ErrorCode::ConfigError, "unknown kernel family '" + std::string(name) + "'");
}

double KernelSpec::operator()(const Eigen::Ref<const Eigen::VectorXd>& x,
                              const Eigen::Ref<const Eigen::VectorXd>& x2) const {
  return kernel_eval(*this, x, x2);
}

double kernel_eval(const KernelSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& x,
                   const Eigen::Ref<const Eigen::VectorXd>& x2) {
  if (x.size() != x2.size()) {
    throw Error(ErrorCode::DimensionMismatch, "kernel inputs of length " +
                                                  std::to_string(x.size()) + " and " +
                                                  std::to_string(x2.size()));
  }
  if (spec.family == KernelFamily::Linear) return x.dot(x2);
  return std::exp(-(x - x2).squaredNorm() / (2.0 * spec.parameter));
}

std::vector<KernelSpec> KernelGrid::specs() const {
  if (count < 1) throw Error(ErrorCode::InvalidSpan, "grid count must be >= 1");
  if (family == KernelFamily::Linear) {
    return std::vector<KernelSpec>(static_cast<std::size_t>(count), {KernelFamily::Linear, 1.0});
  }
  if (!(lo > 0.0) || !(hi > lo) || !std::isfinite(hi)) {
    throw Error(ErrorCode::InvalidSpan,
                "need 0 < lo < hi, got [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
  }
  std::vector<KernelSpec> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int s = 0; s < count; ++s) {
    const double p = count == 1 ? lo : lo + s * (hi - lo) / (count - 1);
    out.push_back({family, p});
  }
  return out;
}

Eigen::MatrixXd squared_distances(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  Eigen::MatrixXd d(a.rows(), b.rows());
  for (Eigen::Index j = 0; j < b.rows(); ++j) {
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      d(i, j) = (a.row(i) - b.row(j)).squaredNorm();
    }
  }
  return d;
}

namespace {

Eigen::MatrixXd kernel_block(const KernelSpec& spec, const Eigen::MatrixXd& a,
                             const Eigen::MatrixXd& b, const Eigen::MatrixXd& sqdist) {
  if (spec.family == KernelFamily::Linear) return a * b.transpose();
  return (-sqdist.array() / (2.0 * spec.parameter)).exp().matrix();
}

}  // namespace

KernelDictionary::KernelDictionary(Eigen::MatrixXd inputs, std::vector<KernelSpec> specs)
    : inputs_(std::move(inputs)), specs_(std::move(specs)) {}

KernelDictionary KernelDictionary::build(const Eigen::MatrixXd& inputs, const KernelGrid& grid) {
  return build(inputs, grid.specs());
}

KernelDictionary KernelDictionary::build(const Eigen::MatrixXd& inputs,
                                         std::vector<KernelSpec> specs) {
  if (inputs.rows() < 1 || inputs.cols() < 1) {
    throw Error(ErrorCode::EmptyTrainingSet, "no training inputs");
  }
  if (specs.empty()) throw Error(ErrorCode::InvalidSpan, "empty kernel list");
  for (const auto& s : specs) {
    if (s.family == KernelFamily::Gaussian && !(s.parameter > 0.0)) {
      throw Error(ErrorCode::InvalidSpan, "Gaussian variance must be positive");
    }
  }
  if (!inputs.allFinite()) {
    throw Error(ErrorCode::InvalidArgument, "training inputs have non-finite entries");
  }

  KernelDictionary dict(inputs, std::move(specs));
  const Eigen::MatrixXd sq = squared_distances(inputs, inputs);
  dict.matrices_.reserve(dict.specs_.size());
  for (const auto& spec : dict.specs_) {
    Eigen::MatrixXd k = kernel_block(spec, inputs, inputs, sq);
    k = 0.5 * (k + k.transpose()).eval();
    dict.matrices_.push_back(std::move(k));
  }
  return dict;
}

void KernelDictionary::check_weights(const Eigen::Ref<const Eigen::VectorXd>& rho) const {
  if (rho.size() != size()) {
    throw Error(ErrorCode::LengthMismatch, "weight vector of length " + std::to_string(rho.size()) +
                                               " for " + std::to_string(size()) + " kernels");
  }
  if (rho.size() > 0 && rho.minCoeff() < 0.0) {
    throw Error(ErrorCode::NegativeWeight, "kernel weights must be nonnegative");
  }
}

Eigen::MatrixXd KernelDictionary::combine(const Eigen::Ref<const Eigen::VectorXd>& rho) const {
  check_weights(rho);
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(num_samples(), num_samples());
  for (Eigen::Index s = 0; s < size(); ++s) {
    if (rho(s) != 0.0) k.noalias() += rho(s) * matrix(s);
  }
  return k;
}

Eigen::VectorXd KernelDictionary::kernel_vector(const Eigen::Ref<const Eigen::VectorXd>& rho,
                                                const Eigen::Ref<const Eigen::VectorXd>& x) const {
  Eigen::MatrixXd q = x.transpose();
  return cross_kernel(rho, q).col(0);
}

Eigen::MatrixXd KernelDictionary::cross_kernel(const Eigen::Ref<const Eigen::VectorXd>& rho,
                                               const Eigen::MatrixXd& queries) const {
  check_weights(rho);
  if (queries.cols() != input_dim()) {
    throw Error(ErrorCode::DimensionMismatch, "query dimension " + std::to_string(queries.cols()) +
                                                  " vs training dimension " +
                                                  std::to_string(input_dim()));
  }
  const Eigen::MatrixXd sq = squared_distances(inputs_, queries);
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(num_samples(), queries.rows());
  for (Eigen::Index s = 0; s < size(); ++s) {
    if (rho(s) != 0.0) out.noalias() += rho(s) * kernel_block(spec(s), inputs_, queries, sq);
  }
  return out;
}

}  // namespace graphkern
