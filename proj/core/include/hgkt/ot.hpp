#pragma once

#include <Eigen/Dense>
#include <vector>

#include "hgkt/errors.hpp"

namespace hgkt {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Entropic optimal transport kernels. Every operation here is a pure
// function of its inputs and safe to call concurrently from many threads.
namespace ot {

/// A point on the probability simplex: non-negative mass per bin, summing
/// to one within 1e-9.
struct Histogram {
  Vector mass;

  int size() const { return static_cast<int>(mass.size()); }

  /// Checks the simplex invariants; throws DimensionError / NumericalError.
  static Histogram validated(Vector m);
  static Histogram uniform(int n);
};

/// Non-negative transport cost per unit of mass moved between bins.
struct CostMatrix {
  Matrix cost;

  int rows() const { return static_cast<int>(cost.rows()); }
  int cols() const { return static_cast<int>(cost.cols()); }
};

/// A coupling between two histograms together with its linear cost <P, C>.
struct TransportPlan {
  Matrix plan;
  double cost = 0.0;
  bool converged = false;
  int iterations = 0;
};

/// Entropic-regularization settings. The default epsilon follows the
/// reference configuration; marginal_tol is the L1 stopping threshold on
/// the marginal violation (1e-9 suits tests, 1e-6 the full pipeline).
struct SinkhornConfig {
  double epsilon = 1e-5;
  int max_iter = 10000;
  double marginal_tol = 1e-9;
};

/// Convex weights over a set of input histograms.
struct BarycenterWeights {
  Vector weights;

  static BarycenterWeights validated(Vector w);
  static BarycenterWeights uniform(int count);
};

struct BarycenterResult {
  Histogram barycenter;
  bool converged = false;
  int iterations = 0;
};

/// Clamps negative entries to zero, then divides by the L1 norm. A vector
/// with no positive entry maps to the uniform histogram so that every
/// instance stays a valid simplex point.
Histogram normalize_to_simplex(const Vector& x);

/// Squared bin-index cost, entry (i, j) = (i - j)^2.
CostMatrix default_cost_matrix(int n);

/// Entropically regularized optimal transport via alternating scaling
/// iterations. Plain scaling is used while the kernel and scaling vectors
/// stay inside [1e-300, 1e300]; otherwise the solver runs in the log
/// domain with epsilon-scaling warm starts, which keeps epsilon = 1e-5
/// computable. Stops when both marginal violations (L1) fall below
/// cfg.marginal_tol, or after cfg.max_iter total iterations.
TransportPlan sinkhorn_distance(const Histogram& a, const Histogram& b,
                                const CostMatrix& C, const SinkhornConfig& cfg);

/// Exact 1-D optimal transport cost for the squared bin-index cost,
/// computed by the closed-form monotone coupling. Test oracle.
double exact_ot_1d(const Histogram& a, const Histogram& b);

/// Entropic Wasserstein barycenter by iterative Bregman projections
/// (alternating Sinkhorn scalings against each input, geometric-mean
/// coupling of the shared marginal). Non-convergence within max_iter
/// returns the best iterate with converged = false.
BarycenterResult wasserstein_barycenter(const std::vector<Histogram>& inputs,
                                        const BarycenterWeights& w,
                                        const CostMatrix& C,
                                        const SinkhornConfig& cfg);

}  // namespace ot
}  // namespace hgkt
