#pragma once

#include <memory>
#include <mutex>

#include <Eigen/Dense>

namespace graphkern {

/// Eigendecomposition L = U diag(values) U^T of a graph Laplacian, eigenvalues ascending.
struct LaplacianSpectrum {
  Eigen::MatrixXd eigenvectors;
  Eigen::VectorXd eigenvalues;
};

/// Undirected weighted graph over M nodes with its combinatorial Laplacian L = D - A.
///
/// Immutable once built. The spectrum is computed on first use and cached; concurrent
/// readers may call spectrum() safely.
class Graph {
 public:
  /// Validates and builds from an adjacency matrix. Self-loops are dropped.
  /// Throws NonSquare, Asymmetric (max |A - A^T| > 1e-9) or NegativeWeight.
  static Graph from_adjacency(const Eigen::MatrixXd& adjacency);

  /// Graph on M nodes with no edges.
  static Graph edgeless(Eigen::Index num_nodes);

  Eigen::Index num_nodes() const { return adjacency_.rows(); }
  const Eigen::MatrixXd& adjacency() const { return adjacency_; }
  const Eigen::MatrixXd& laplacian() const { return laplacian_; }

  /// y^T L y. Throws DimensionMismatch.
  double smoothness(const Eigen::Ref<const Eigen::VectorXd>& y) const;

  const LaplacianSpectrum& spectrum() const;

 private:
  Graph(Eigen::MatrixXd adjacency, Eigen::MatrixXd laplacian);

  struct SpectrumCache {
    std::once_flag once;
    LaplacianSpectrum value;
  };

  Eigen::MatrixXd adjacency_;
  Eigen::MatrixXd laplacian_;
  std::shared_ptr<SpectrumCache> cache_;
};

/// Symmetric eigendecomposition of L with round-off negatives (>= -1e-10) clamped to zero.
/// Throws ConvergenceFailure.
LaplacianSpectrum laplacian_eigendecomposition(const Graph& graph);

/// Node positions, either (latitude, longitude) in degrees or points in R^d.
struct NodeCoordinates {
  enum class Metric { Geodesic, Euclidean };

  Metric metric = Metric::Geodesic;
  /// M rows; two columns (lat, lon) in geodesic mode.
  Eigen::MatrixXd positions;
};

inline constexpr double kEarthRadiusKm = 6371.0;

/// Great-circle distance in km by the haversine formula.
double haversine_km(double lat1_deg, double lon1_deg, double lat2_deg, double lon2_deg);

/// Pairwise distance matrix under the coordinate metric.
/// Throws InvalidCoordinates for out-of-range lat/lon or a bad column count.
Eigen::MatrixXd pairwise_distances(const NodeCoordinates& coords);

/// a_ij = exp(-d_ij^2 / Z), Z the sum of d_ij^2 over ordered pairs i != j; zero diagonal.
/// Throws DegenerateCoordinates when all positions coincide, InvalidArgument when M < 2.
Eigen::MatrixXd geodesic_adjacency(const NodeCoordinates& coords);

}  // namespace graphkern
