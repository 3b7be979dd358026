#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "hgkt/hgraph.hpp"

namespace hgkt::gnn {

using graph::ClassPrototype;
using graph::HeteroGraph;
using graph::InstanceRecord;

/// Weights of the two embedding layers. W1: h x 2d, W2: n x 2h, where d is
/// the attribute dimension, h the hidden dimension, n the visual feature
/// dimension.
struct GnnParams {
  Matrix W1;
  Vector b1;
  Matrix W2;
  Vector b2;

  int hidden_dim() const { return static_cast<int>(W1.rows()); }
  int attr_dim() const { return static_cast<int>(W1.cols()) / 2; }
  int feature_dim() const { return static_cast<int>(W2.rows()); }

  bool all_finite() const;

  /// Symmetric uniform initialization scaled by 1/sqrt(fan-in), zero biases.
  static GnnParams init(int attr_dim, int hidden_dim, int feature_dim,
                        std::uint64_t seed);
  static GnnParams zeros(int attr_dim, int hidden_dim, int feature_dim);
};

struct TrainConfig {
  double mu = 0.1;          // neighbor-term balance
  double xi = 0.001;        // Frobenius weight penalty (doubles as decay)
  double lr = 1e-4;
  double leaky_slope = 0.2;
  int hidden_dim = 1600;
  int epochs = 1000;
  int sample_size = 50;
  std::uint64_t seed = 0;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
};

/// Layer activations. h0 row v is the prototype of v's class; h2 holds the
/// final embedding of each class's representative node (row per class).
struct NodeStates {
  Matrix h0;      // num_nodes x d
  Matrix h1;      // num_nodes x h
  Matrix rep_h2;  // num_classes x n
};

/// Element-wise mean of the neighbor vectors; an empty neighborhood falls
/// back to the node's own vector.
Vector aggregate_mean(const std::vector<Vector>& neighbor_vectors,
                      const Vector& self_vector);

/// LeakyReLU(W * concat(h_self, mu * h_nbr) + b).
Vector embed_layer(const Vector& h_self, const Vector& h_nbr, const Matrix& W,
                   const Vector& b, double mu, double slope);

/// Two-layer pass over the heterogeneous graph. Neighbor sets are capped at
/// cfg.sample_size via seeded sampling (seed mixed with `step` so training
/// can resample per epoch while keeping each step deterministic); pass
/// use_sampling = false for full-neighborhood inference.
NodeStates forward(const HeteroGraph& g, const std::vector<ClassPrototype>& prototypes,
                   const GnnParams& params, const TrainConfig& cfg,
                   std::uint64_t step = 0, bool use_sampling = true);

/// Mean squared distance between each instance's feature and its class
/// representative's embedding, plus xi * (|W1|_F^2 + |W2|_F^2).
double loss(const NodeStates& states, const std::vector<InstanceRecord>& dataset,
            const HeteroGraph& g, const GnnParams& params, double xi);

/// Exact analytic gradient of loss(forward(...)) with respect to all four
/// parameter tensors. Sampling is frozen by (cfg.seed, step), so the
/// differentiated function matches forward at the same step. The LeakyReLU
/// subgradient at 0 takes the negative-branch slope.
GnnParams gradients(const HeteroGraph& g, const std::vector<InstanceRecord>& dataset,
                    const std::vector<ClassPrototype>& prototypes,
                    const GnnParams& params, const TrainConfig& cfg,
                    std::uint64_t step = 0);

/// First and second Adam moments, one tensor per parameter tensor.
struct AdamState {
  Matrix mW1, vW1, mW2, vW2;
  Vector mb1, vb1, mb2, vb2;

  static AdamState zeros_like(const GnnParams& p);
};

/// Standard Adam update with bias correction, t >= 1. Weight decay enters
/// through the xi penalty inside the loss, not here. Throws NumericalError
/// on non-finite gradients without touching the parameters.
void adam_step(GnnParams& params, const GnnParams& grads, AdamState& moments,
               int t, const TrainConfig& cfg);

struct TrainResult {
  GnnParams params;
  std::vector<double> loss_history;  // loss before each update, one per epoch
};

/// Full-batch training with per-epoch reseeded neighbor sampling.
TrainResult train(const HeteroGraph& g, const std::vector<InstanceRecord>& dataset,
                  const std::vector<ClassPrototype>& prototypes,
                  const TrainConfig& cfg);

/// Checkpoint text format: header `d h n`, then W1, b1, W2, b2 row-major,
/// one row per line, shortest round-trip decimals.
void save_checkpoint(std::ostream& os, const GnnParams& params);
GnnParams load_checkpoint(std::istream& is);

/// Loss history as CSV `epoch,loss`.
void save_loss_csv(std::ostream& os, const std::vector<double>& history);

}  // namespace hgkt::gnn
