#include "hgkt/ot.hpp"

#include <cmath>
#include <limits>
#include <optional>

namespace hgkt::ot {
namespace {

constexpr double kScaleFloor = 1e-300;
constexpr double kScaleCeil = 1e300;
constexpr double kInf = std::numeric_limits<double>::infinity();

// exp(-x) underflows below the double range once x exceeds ~708.
constexpr double kLogRange = 690.0;

void check_config(const SinkhornConfig& cfg) {
  if (!(cfg.epsilon > 0.0)) throw ConfigError("sinkhorn: epsilon must be > 0");
  if (cfg.max_iter < 1) throw ConfigError("sinkhorn: max_iter must be >= 1");
  if (!(cfg.marginal_tol > 0.0)) throw ConfigError("sinkhorn: marginal_tol must be > 0");
}

void check_cost(const CostMatrix& C) {
  if (C.cost.size() == 0) throw DimensionError("cost matrix is empty");
  if (C.cost.minCoeff() < 0.0 || !C.cost.allFinite()) {
    throw NumericalError("cost matrix must be finite and non-negative");
  }
}

Vector safe_log(const Vector& x) {
  // log(0) = -inf is intentional; empty bins never receive mass.
  return x.array().log().matrix();
}

// log sum_i exp(M(i,j) + add(i)) for every column j. Column access is
// contiguous and the exp runs through Eigen's vectorized array path.
Vector lse_cols(const Matrix& M, const Vector& add) {
  const Eigen::Index n = M.rows(), m = M.cols();
  Vector out(m);
  Vector buf(n);
  for (Eigen::Index j = 0; j < m; ++j) {
    buf = M.col(j) + add;
    const double mx = buf.maxCoeff();
    if (!std::isfinite(mx)) {
      out(j) = mx;
      continue;
    }
    out(j) = mx + std::log((buf.array() - mx).exp().sum());
  }
  return out;
}


// Geometric epsilon schedule from max(C)/4 down to the target. Each stage
// must run until its marginals settle, otherwise slow mass shuffles are
// deferred to the final (slowest) stage.
std::vector<double> epsilon_schedule(double cmax, double target) {
  std::vector<double> stages;
  double e = cmax / 4.0;
  while (e > target * 1.0000001) {
    stages.push_back(e);
    e *= 0.5;
  }
  stages.push_back(target);
  return stages;
}

// True when a scaling vector escaped the representable window. Exact zeros
// from empty marginal bins are fine; only positive-mass rows count.
bool scaling_out_of_range(const Vector& scaling, const Vector& marginal) {
  for (Eigen::Index i = 0; i < scaling.size(); ++i) {
    if (marginal(i) <= 0.0) continue;
    const double s = scaling(i);
    if (!std::isfinite(s) || s < kScaleFloor || s > kScaleCeil) return true;
  }
  return false;
}

TransportPlan finish_plan(Matrix plan, const CostMatrix& C, bool converged, int iters) {
  if (!plan.allFinite()) {
    throw NumericalError(
        "sinkhorn: non-finite transport plan; inputs exceed even the "
        "log-domain range");
  }
  TransportPlan out;
  out.cost = (plan.array() * C.cost.array()).sum();
  out.plan = std::move(plan);
  out.converged = converged;
  out.iterations = iters;
  return out;
}

std::optional<TransportPlan> sinkhorn_plain(const Histogram& a, const Histogram& b,
                                            const CostMatrix& C,
                                            const SinkhornConfig& cfg, int& used) {
  const Matrix K = (-C.cost / cfg.epsilon).array().exp();
  Vector u = Vector::Ones(a.size());
  Vector v = Vector::Ones(b.size());
  bool converged = false;
  bool first = true;
  while (used < cfg.max_iter) {
    ++used;
    const Vector Kv = K * v;
    if (!first) {
      const double viol = ((u.array() * Kv.array()) - a.mass.array()).abs().sum();
      if (viol < cfg.marginal_tol) {
        converged = true;
        break;
      }
    }
    first = false;
    u = (a.mass.array() / Kv.array()).matrix();
    for (Eigen::Index i = 0; i < u.size(); ++i) {
      if (a.mass(i) <= 0.0) u(i) = 0.0;  // 0/underflow -> keep the exact zero
    }
    if (scaling_out_of_range(u, a.mass)) return std::nullopt;
    const Vector KTu = K.transpose() * u;
    v = (b.mass.array() / KTu.array()).matrix();
    for (Eigen::Index j = 0; j < v.size(); ++j) {
      if (b.mass(j) <= 0.0) v(j) = 0.0;
    }
    if (scaling_out_of_range(v, b.mass)) return std::nullopt;
  }
  Matrix plan = u.asDiagonal() * K * v.asDiagonal();
  return finish_plan(std::move(plan), C, converged, used);
}

double row_violation(const Matrix& logKT, const Vector& log_u, const Vector& log_v,
                     const Vector& a) {
  const Vector r = lse_cols(logKT, log_v);
  double viol = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    const double rowmass = std::exp(log_u(i) + r(i));
    if (!std::isfinite(rowmass)) return kInf;
    viol += std::abs(rowmass - a(i));
  }
  return viol;
}

TransportPlan sinkhorn_log(const Histogram& a, const Histogram& b,
                           const CostMatrix& C, const SinkhornConfig& cfg,
                           int used) {
  const Eigen::Index n = a.size(), m = b.size();
  const Vector log_a = safe_log(a.mass);
  const Vector log_b = safe_log(b.mass);
  Vector log_u = Vector::Zero(n);
  Vector log_v = Vector::Zero(m);

  const double cmax = C.cost.maxCoeff();
  const std::vector<double> stages =
      cmax > 0.0 ? epsilon_schedule(cmax, cfg.epsilon)
                 : std::vector<double>{cfg.epsilon};

  bool converged = false;
  double prev_eps = 0.0;
  Matrix logK, logKT;
  for (std::size_t si = 0; si < stages.size(); ++si) {
    const double eps = stages[si];
    const bool final_stage = (si + 1 == stages.size());
    if (si > 0) {
      // Dual potentials f = eps*log_u persist across stages.
      const double rescale = prev_eps / eps;
      log_u *= rescale;
      log_v *= rescale;
    }
    prev_eps = eps;
    logK = -C.cost / eps;
    logKT = logK.transpose();  // contiguous access for the u-side reduction
    const double tol =
        final_stage ? cfg.marginal_tol : std::max(cfg.marginal_tol * 100.0, 1e-4);
    // Slicing the remaining budget guarantees the schedule reaches the
    // target epsilon even when an intermediate stage stalls.
    const int stages_left = static_cast<int>(stages.size() - si);
    const int cap = final_stage
                        ? cfg.max_iter
                        : std::max(50, (cfg.max_iter - used) / stages_left);

    bool v_scaled = false;  // v updated at least once at this epsilon
    Vector snap_u, snap_v;
    double snap_viol = kInf;
    int snap_it = 0;
    double window_viol = kInf;
    int stalled_windows = 0;
    for (int it = 0; it < cap && used < cfg.max_iter; ++it) {
      ++used;
      Vector r = lse_cols(logKT, log_v);  // log(K v)
      if (v_scaled) {
        double viol = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
          const double rowmass = std::exp(log_u(i) + r(i));
          viol += std::abs(rowmass - a.mass(i));
        }
        if (viol < tol) {
          if (final_stage) converged = true;
          break;
        }
        // Frozen-iterate check: plateaus resolve in bursts (the drift jumps
        // above), so only a long run of stalled windows — under 0.64%
        // combined progress across 16 windows of 64 rounds — counts as
        // genuinely stuck; the best iterate is returned with converged
        // false rather than grinding out the whole budget.
        if (it % 64 == 0) {
          if (window_viol < kInf) {
            const double rate = std::pow(viol / window_viol, 1.0 / 64.0);
            if (rate >= 0.9999) {
              if (++stalled_windows >= 16) break;
            } else {
              stalled_windows = 0;
            }
          }
          window_viol = viol;
        }
        // Near-tied reduced costs produce long plateaus where mass drifts
        // between competing assignments at a constant per-iteration rate.
        // Riding that drift with the largest improving step cuts the
        // plateau to a handful of rounds.
        if (it % 16 == 0) {
          if (snap_it > 0 && viol > 0.5 * snap_viol) {
            Vector du = Vector::Zero(n), dv = Vector::Zero(m);
            const double span = static_cast<double>(it - snap_it);
            for (Eigen::Index i = 0; i < n; ++i) {
              if (a.mass(i) > 0.0) du(i) = (log_u(i) - snap_u(i)) / span;
            }
            for (Eigen::Index j = 0; j < m; ++j) {
              if (b.mass(j) > 0.0) dv(j) = (log_v(j) - snap_v(j)) / span;
            }
            double best_alpha = 0.0, best_viol = viol;
            for (double alpha = 64.0; alpha <= 1e6; alpha *= 4.0) {
              if (used >= cfg.max_iter) break;
              ++used;
              const double cand =
                  row_violation(logKT, log_u + alpha * du, log_v + alpha * dv, a.mass);
              if (cand < best_viol) {
                best_viol = cand;
                best_alpha = alpha;
              } else if (best_alpha > 0.0) {
                break;  // past the optimum
              }
            }
            if (best_alpha > 0.0) {
              log_u += best_alpha * du;
              log_v += best_alpha * dv;
              r = lse_cols(logKT, log_v);  // settle plainly from the new point
            }
          }
          snap_u = log_u;
          snap_v = log_v;
          snap_viol = viol;
          snap_it = it;
        }
      }
      for (Eigen::Index i = 0; i < n; ++i) {
        log_u(i) = a.mass(i) > 0.0 ? log_a(i) - r(i) : -kInf;
      }
      const Vector c = lse_cols(logK, log_u);
      for (Eigen::Index j = 0; j < m; ++j) {
        log_v(j) = b.mass(j) > 0.0 ? log_b(j) - c(j) : -kInf;
      }
      v_scaled = true;
    }
  }

  Matrix plan(n, m);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) {
      plan(i, j) = std::exp(logK(i, j) + log_u(i) + log_v(j));
    }
  }
  return finish_plan(std::move(plan), C, converged, used);
}

}  // namespace

Histogram Histogram::validated(Vector m) {
  if (m.size() == 0) throw DimensionError("histogram: empty mass vector");
  if (!m.allFinite()) throw NumericalError("histogram: non-finite entry");
  if (m.minCoeff() < 0.0) throw NumericalError("histogram: negative entry");
  if (std::abs(m.sum() - 1.0) > 1e-9) {
    throw NumericalError("histogram: mass does not sum to 1 (got " +
                         std::to_string(m.sum()) + ")");
  }
  return Histogram{std::move(m)};
}

Histogram Histogram::uniform(int n) {
  if (n < 1) throw DimensionError("histogram: size must be >= 1");
  return Histogram{Vector::Constant(n, 1.0 / n)};
}

BarycenterWeights BarycenterWeights::validated(Vector w) {
  if (w.size() == 0) throw DimensionError("barycenter weights: empty");
  if (!w.allFinite() || w.minCoeff() < 0.0) {
    throw NumericalError("barycenter weights: entries must be finite and >= 0");
  }
  if (std::abs(w.sum() - 1.0) > 1e-9) {
    throw NumericalError("barycenter weights: must sum to 1");
  }
  return BarycenterWeights{std::move(w)};
}

BarycenterWeights BarycenterWeights::uniform(int count) {
  if (count < 1) throw DimensionError("barycenter weights: count must be >= 1");
  return BarycenterWeights{Vector::Constant(count, 1.0 / count)};
}

Histogram normalize_to_simplex(const Vector& x) {
  if (x.size() == 0) throw DimensionError("normalize_to_simplex: empty vector");
  Vector clamped = x.cwiseMax(0.0);
  const double total = clamped.sum();
  if (!(total > 0.0)) return Histogram::uniform(static_cast<int>(x.size()));
  return Histogram::validated(clamped / total);
}

CostMatrix default_cost_matrix(int n) {
  if (n < 1) throw DimensionError("default_cost_matrix: size must be >= 1");
  Matrix c(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double d = static_cast<double>(i - j);
      c(i, j) = d * d;
    }
  }
  return CostMatrix{std::move(c)};
}

TransportPlan sinkhorn_distance(const Histogram& a, const Histogram& b,
                                const CostMatrix& C, const SinkhornConfig& cfg) {
  check_config(cfg);
  check_cost(C);
  if (a.size() != C.rows() || b.size() != C.cols()) {
    throw DimensionError("sinkhorn: histogram lengths do not match cost matrix");
  }

  int used = 0;
  const double cmax = C.cost.maxCoeff();
  if (cmax / cfg.epsilon <= kLogRange) {
    // Kernel representable: plain scaling, escalating to log domain if a
    // scaling vector leaves [1e-300, 1e300].
    auto plain = sinkhorn_plain(a, b, C, cfg, used);
    if (plain) return *plain;
  }
  return sinkhorn_log(a, b, C, cfg, used);
}

double exact_ot_1d(const Histogram& a, const Histogram& b) {
  if (a.size() != b.size()) {
    throw DimensionError("exact_ot_1d: histogram lengths differ");
  }
  const int n = a.size();
  double cost = 0.0;
  int i = 0, j = 0;
  double ra = a.mass(0), rb = b.mass(0);
  while (i < n && j < n) {
    const double moved = std::min(ra, rb);
    const double d = static_cast<double>(i - j);
    cost += moved * d * d;
    ra -= moved;
    rb -= moved;
    if (ra <= 0.0) {
      ++i;
      if (i < n) ra = a.mass(i);
    }
    if (rb <= 0.0) {
      ++j;
      if (j < n) rb = b.mass(j);
    }
  }
  return cost;
}

BarycenterResult wasserstein_barycenter(const std::vector<Histogram>& inputs,
                                        const BarycenterWeights& w,
                                        const CostMatrix& C,
                                        const SinkhornConfig& cfg) {
  check_config(cfg);
  check_cost(C);
  if (inputs.empty()) throw DimensionError("barycenter: no input histograms");
  if (static_cast<int>(inputs.size()) != static_cast<int>(w.weights.size())) {
    throw DimensionError("barycenter: weight count does not match input count");
  }
  if (C.rows() != C.cols()) {
    throw DimensionError("barycenter: cost matrix must be square");
  }
  const Eigen::Index n = C.rows();
  for (const Histogram& h : inputs) {
    if (h.size() != n) {
      throw DimensionError("barycenter: histogram length does not match cost matrix");
    }
  }

  const std::size_t S = inputs.size();
  std::vector<Vector> log_b(S);
  for (std::size_t s = 0; s < S; ++s) log_b[s] = safe_log(inputs[s].mass);
  std::vector<Vector> log_u(S, Vector::Zero(n));
  Vector log_bar = Vector::Constant(n, -std::log(static_cast<double>(n)));

  const double cmax = C.cost.maxCoeff();
  const std::vector<double> stages =
      cmax > 0.0 ? epsilon_schedule(cmax, cfg.epsilon)
                 : std::vector<double>{cfg.epsilon};

  // Every IBP round performs S Sinkhorn scaling sweeps, so rounds are
  // budgeted against max_iter in proportion to that work.
  const int round_budget = std::max(20, cfg.max_iter / static_cast<int>(S));
  int used = 0;
  bool converged = false;
  double prev_eps = 0.0;
  Matrix logK, logKT;

  // One IBP round at the current epsilon: match every coupling's column
  // marginal to its input, then couple the row marginals through their
  // weighted geometric mean. Returns the largest disagreement between a
  // coupling's row marginal and the barycenter.
  auto ibp_round = [&](std::vector<Vector>& lu, Vector& lbar) {
    Vector new_log_bar = Vector::Zero(n);
    std::vector<Vector> row_marg(S);
    for (std::size_t s = 0; s < S; ++s) {
      const Vector c = lse_cols(logK, lu[s]);
      Vector log_v(n);
      for (Eigen::Index j = 0; j < n; ++j) log_v(j) = log_b[s](j) - c(j);
      const Vector r = lse_cols(logKT, log_v);
      row_marg[s] = lu[s] + r;
      const double ws = w.weights(s);
      if (ws > 0.0) new_log_bar += ws * row_marg[s];
    }
    lbar = new_log_bar;
    double viol = 0.0;
    for (std::size_t s = 0; s < S; ++s) {
      const double dev = (row_marg[s].array().exp() - lbar.array().exp()).abs().sum();
      viol = std::max(viol, std::isfinite(dev) ? dev : kInf);
      lu[s] += lbar - row_marg[s];
    }
    return viol;
  };

  for (std::size_t si = 0; si < stages.size(); ++si) {
    const double eps = stages[si];
    const bool final_stage = (si + 1 == stages.size());
    if (si > 0) {
      const double rescale = prev_eps / eps;
      for (auto& lu : log_u) lu *= rescale;
    }
    prev_eps = eps;
    logK = -C.cost / eps;
    logKT = logK.transpose();
    const double tol =
        final_stage ? cfg.marginal_tol : std::max(cfg.marginal_tol * 100.0, 1e-4);
    const int stages_left = static_cast<int>(stages.size() - si);
    const int cap = final_stage
                        ? round_budget
                        : std::max(10, (round_budget - used) / stages_left);

    std::vector<Vector> snap_u;
    double snap_viol = kInf;
    int snap_it = 0;
    double window_viol = kInf;
    int stalled_windows = 0;
    for (int it = 0; it < cap && used < round_budget; ++it) {
      ++used;
      const double viol = ibp_round(log_u, log_bar);
      if (viol < tol) {
        if (final_stage) converged = true;
        break;
      }
      if (it % 32 == 0) {
        if (window_viol < kInf) {
          const double rate = std::pow(viol / window_viol, 1.0 / 32.0);
          if (rate >= 0.9999) {
            if (++stalled_windows >= 16) break;
          } else {
            stalled_windows = 0;
          }
        }
        window_viol = viol;
      }
      // Same plateau treatment as the pairwise solver: when progress
      // stalls, extrapolate the potentials along their drift and keep the
      // largest improving step.
      if (it % 16 == 0) {
        if (snap_it > 0 && viol > 0.5 * snap_viol) {
          const double span = static_cast<double>(it - snap_it);
          std::vector<Vector> drift(S);
          for (std::size_t s = 0; s < S; ++s) drift[s] = (log_u[s] - snap_u[s]) / span;
          double best_alpha = 0.0, best_viol = viol;
          std::vector<Vector> cand(S);
          Vector cand_bar;
          for (double alpha = 64.0; alpha <= 1e6; alpha *= 4.0) {
            if (used >= round_budget) break;
            ++used;
            for (std::size_t s = 0; s < S; ++s) cand[s] = log_u[s] + alpha * drift[s];
            const double cv = ibp_round(cand, cand_bar);
            if (cv < best_viol) {
              best_viol = cv;
              best_alpha = alpha;
            } else if (best_alpha > 0.0) {
              break;
            }
          }
          if (best_alpha > 0.0) {
            for (std::size_t s = 0; s < S; ++s) log_u[s] += best_alpha * drift[s];
            ibp_round(log_u, log_bar);
          }
        }
        snap_u = log_u;
        snap_viol = viol;
        snap_it = it;
      }
    }
  }

  Vector bar = log_bar.array().exp();
  if (!bar.allFinite() || !(bar.sum() > 0.0)) {
    throw NumericalError("barycenter: non-finite iterate");
  }
  bar /= bar.sum();
  BarycenterResult out;
  out.barycenter = Histogram::validated(std::move(bar));
  out.converged = converged;
  out.iterations = used;
  return out;
}

}  // namespace hgkt::ot
