#include "graphkern/graph.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "graphkern/error.hpp"

namespace graphkern {

namespace {

constexpr double kSymmetryTolerance = 1e-9;
constexpr double kEigenvalueClamp = 1e-10;

}  // namespace

Graph::Graph(Eigen::MatrixXd adjacency, Eigen::MatrixXd laplacian)
    : adjacency_(std::move(adjacency)),
      laplacian_(std::move(laplacian)),
      cache_(std::make_shared<SpectrumCache>()) {}

Graph Graph::from_adjacency(const Eigen::MatrixXd& adjacency) {
  if (adjacency.rows() != adjacency.cols() || adjacency.rows() == 0) {
    throw Error(ErrorCode::NonSquare, "adjacency is " + std::to_string(adjacency.rows()) + "x" +
                                          std::to_string(adjacency.cols()));
  }
  if (!adjacency.allFinite()) {
    throw Error(ErrorCode::InvalidArgument, "adjacency has non-finite entries");
  }
  const double asym = (adjacency - adjacency.transpose()).cwiseAbs().maxCoeff();
  if (asym > kSymmetryTolerance) {
    throw Error(ErrorCode::Asymmetric, "max |A - A^T| = " + std::to_string(asym));
  }
  if (adjacency.minCoeff() < 0.0) {
    throw Error(ErrorCode::NegativeWeight, "adjacency has negative entries");
  }

  // Symmetrize exactly so L is symmetric to the last bit.
  Eigen::MatrixXd a = 0.5 * (adjacency + adjacency.transpose());
  a.diagonal().setZero();
  Eigen::MatrixXd lap = -a;
  lap.diagonal() = a.rowwise().sum();
  return Graph(std::move(a), std::move(lap));
}

Graph Graph::edgeless(Eigen::Index num_nodes) {
  return from_adjacency(Eigen::MatrixXd::Zero(num_nodes, num_nodes));
}

double Graph::smoothness(const Eigen::Ref<const Eigen::VectorXd>& y) const {
  if (y.size() != num_nodes()) {
    throw Error(ErrorCode::DimensionMismatch, "signal length " + std::to_string(y.size()) +
                                                  " for graph of " +
                                                  std::to_string(num_nodes()) + " nodes");
  }
  return std::max(0.0, y.dot(laplacian_ * y));
}

const LaplacianSpectrum& Graph::spectrum() const {
  std::call_once(cache_->once, [this] { cache_->value = laplacian_eigendecomposition(*this); });
  return cache_->value;
}

LaplacianSpectrum laplacian_eigendecomposition(const Graph& graph) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(graph.laplacian());
  if (solver.info() != Eigen::Success) {
    throw Error(ErrorCode::ConvergenceFailure, "Laplacian eigensolver did not converge");
  }
  LaplacianSpectrum out{solver.eigenvectors(), solver.eigenvalues()};
  for (Eigen::Index i = 0; i < out.eigenvalues.size(); ++i) {
    if (out.eigenvalues(i) < 0.0) {
      if (out.eigenvalues(i) < -kEigenvalueClamp * std::max(1.0, graph.laplacian().cwiseAbs().maxCoeff())) {
        throw Error(ErrorCode::ConvergenceFailure,
                    "Laplacian eigenvalue " + std::to_string(out.eigenvalues(i)) + " is negative");
      }
      out.eigenvalues(i) = 0.0;
    }
  }
  return out;
}

double haversine_km(double lat1_deg, double lon1_deg, double lat2_deg, double lon2_deg) {
  constexpr double deg = std::numbers::pi / 180.0;
  const double dlat = (lat2_deg - lat1_deg) * deg;
  const double dlon = (lon2_deg - lon1_deg) * deg;
  const double s = std::sin(dlat / 2) * std::sin(dlat / 2) +
                   std::cos(lat1_deg * deg) * std::cos(lat2_deg * deg) * std::sin(dlon / 2) *
                       std::sin(dlon / 2);
  return 2.0 * kEarthRadiusKm * std::asin(std::min(1.0, std::sqrt(s)));
}

Eigen::MatrixXd pairwise_distances(const NodeCoordinates& coords) {
  const auto& p = coords.positions;
  const Eigen::Index m = p.rows();
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(m, m);
  if (!p.allFinite()) {
    throw Error(ErrorCode::InvalidCoordinates, "coordinates have non-finite entries");
  }

  if (coords.metric == NodeCoordinates::Metric::Geodesic) {
    if (p.cols() != 2) {
      throw Error(ErrorCode::InvalidCoordinates, "geodesic coordinates need (lat, lon) columns");
    }
    for (Eigen::Index i = 0; i < m; ++i) {
      if (std::abs(p(i, 0)) > 90.0 || std::abs(p(i, 1)) > 180.0) {
        throw Error(ErrorCode::InvalidCoordinates,
                    "node " + std::to_string(i) + " has latitude/longitude out of range");
      }
    }
    for (Eigen::Index i = 0; i < m; ++i) {
      for (Eigen::Index j = i + 1; j < m; ++j) {
        d(i, j) = d(j, i) = haversine_km(p(i, 0), p(i, 1), p(j, 0), p(j, 1));
      }
    }
  } else {
    for (Eigen::Index i = 0; i < m; ++i) {
      for (Eigen::Index j = i + 1; j < m; ++j) {
        d(i, j) = d(j, i) = (p.row(i) - p.row(j)).norm();
      }
    }
  }
  return d;
}

Eigen::MatrixXd geodesic_adjacency(const NodeCoordinates& coords) {
  if (coords.positions.rows() < 2) {
    throw Error(ErrorCode::InvalidArgument, "need at least two nodes");
  }
  const Eigen::MatrixXd sq = pairwise_distances(coords).array().square().matrix();
  // Ordered pairs: every unordered pair counted twice; the diagonal is zero.
  const double z = sq.sum();
  if (!(z > 0.0)) {
    throw Error(ErrorCode::DegenerateCoordinates, "all node positions coincide");
  }
  Eigen::MatrixXd a = (-sq.array() / z).exp().matrix();
  a.diagonal().setZero();
  return a;
}

}  // namespace graphkern
