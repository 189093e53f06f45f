#pragma once

// Block-diagonalization baseline: null-space precoders, per-user SVD of the
// effective channel, and weighted water-filling across all streams.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <vector>

#include "wsrpso/errors.hpp"
#include "wsrpso/numerics.hpp"
#include "wsrpso/system_model.hpp"

namespace wsrpso {

struct BdDecomposition {
  std::vector<ComplexMatrix> b;        // N_t x d null-space bases
  std::vector<ComplexMatrix> d_mat;    // d x d right singular vectors of H_k B_k
  std::vector<RealVector> lambda;      // d singular values of H_k B_k, non-increasing
  std::vector<ComplexMatrix> u_tilde;  // N_r x d left singular vectors of H_k B_k
  std::vector<double> residual;        // |interference_matrix(k) B_k|_F
  std::vector<double> interference_norm;  // |interference_matrix(k)|_F
};

struct PowerAllocation {
  std::vector<RealVector> p;  // per user, per stream
  double lambda_dual = 0.0;
  bool degenerate = false;    // no stream had a positive weighted gain
};

struct BdDesign {
  BdDecomposition decomposition;
  PowerAllocation power;
};

struct BdResult {
  BdDesign design;
  PrecoderSet f;
  DecoderSet w;
};

/// Vertical stack of H_l for l != k in ascending order; nullopt when K = 1.
inline std::optional<ComplexMatrix> interference_matrix(const ChannelSet& h, std::size_t k) {
  if (k >= h.size()) throw ValidationError("interference_matrix: user index out of range");
  if (h.size() < 2) return std::nullopt;
  const Eigen::Index nr = h[0].rows();
  ComplexMatrix stack(nr * static_cast<Eigen::Index>(h.size() - 1), h[0].cols());
  Eigen::Index row = 0;
  for (std::size_t l = 0; l < h.size(); ++l) {
    if (l == k) continue;
    stack.middleRows(row, nr) = h[l];
    row += nr;
  }
  return stack;
}

/// Last d right singular vectors of the interference matrix: an exact null
/// space basis when one of dimension d exists, the minimum-leakage basis
/// otherwise. With no interferers, the first d standard basis vectors.
inline ComplexMatrix null_space_basis(const std::optional<ComplexMatrix>& h_int, std::size_t d, std::size_t n_t) {
  if (d > n_t) throw ValidationError("null_space_basis: d exceeds the number of transmit antennas");
  const auto dd = static_cast<Eigen::Index>(d);
  if (!h_int) return ComplexMatrix::Identity(static_cast<Eigen::Index>(n_t), dd);
  if (static_cast<std::size_t>(h_int->cols()) != n_t)
    throw ValidationError("null_space_basis: interference matrix has wrong column count");
  const auto factors = svd(*h_int);
  return factors.v.rightCols(dd);
}

struct EffectiveChannel {
  ComplexMatrix d_mat;
  RealVector lambda;
  ComplexMatrix u_tilde;
};

/// SVD of the block channel H_k B_k split into d parallel sub-channels.
inline EffectiveChannel effective_svd(const ComplexMatrix& h_k, const ComplexMatrix& b_k) {
  if (h_k.cols() != b_k.rows()) throw ValidationError("effective_svd: shape mismatch");
  const Eigen::Index d = b_k.cols();
  if (d > h_k.rows()) throw ValidationError("effective_svd: more streams than receive antennas");
  const auto factors = svd(h_k * b_k);
  return {factors.v.leftCols(d), factors.sigma.head(d), factors.u.leftCols(d)};
}

/// Sum_k sum_i w_k log2(1 + lambda_{k,i}^2 p_{k,i} / sigma^2).
inline double water_fill_objective(const SystemConfig& cfg, const std::vector<RealVector>& gains,
                                   const std::vector<RealVector>& p) {
  double total = 0.0;
  for (std::size_t k = 0; k < gains.size(); ++k)
    for (Eigen::Index i = 0; i < gains[k].size(); ++i)
      total += cfg.weights[k] * std::log2(1.0 + gains[k](i) * gains[k](i) * p[k](i) / cfg.noise_power);
  return total;
}

/// Weighted water-filling over all (user, stream) channels with gains given as
/// singular values. Power p_{k,i} = max(0, w_k/(lambda ln 2) - sigma^2/g^2),
/// with the water level lambda found by bisection on the monotone
/// total-power map and then pinned in closed form on the resulting active set.
inline PowerAllocation water_fill(const SystemConfig& cfg, const std::vector<RealVector>& gains) {
  if (gains.size() != cfg.users) throw ValidationError("water_fill: expected one gain vector per user");
  const double sigma2 = cfg.noise_power;
  const double ln2 = std::numbers::ln2;

  PowerAllocation out;
  out.p.reserve(gains.size());
  double lambda_hi = 0.0;
  for (std::size_t k = 0; k < gains.size(); ++k) {
    out.p.push_back(RealVector::Zero(gains[k].size()));
    for (Eigen::Index i = 0; i < gains[k].size(); ++i) {
      const double g = gains[k](i);
      if (!(g >= 0.0) || !std::isfinite(g)) throw ValidationError("water_fill: gains must be finite and >= 0");
      lambda_hi = std::max(lambda_hi, cfg.weights[k] * g * g / (sigma2 * ln2));
    }
  }
  if (!(lambda_hi > 0.0)) {
    out.degenerate = true;
    return out;
  }

  auto power_at = [&](double lambda, std::vector<RealVector>* p) {
    double sum = 0.0;
    for (std::size_t k = 0; k < gains.size(); ++k) {
      for (Eigen::Index i = 0; i < gains[k].size(); ++i) {
        const double g2 = gains[k](i) * gains[k](i);
        double pki = 0.0;
        if (cfg.weights[k] > 0.0 && g2 > 0.0) pki = std::max(0.0, cfg.weights[k] / (lambda * ln2) - sigma2 / g2);
        if (p) (*p)[k](i) = pki;
        sum += pki;
      }
    }
    return sum;
  };

  const double target = cfg.p_max;
  double lo = 0.0;
  double hi = lambda_hi;
  double lambda = 0.5 * hi;
  for (int iter = 0; iter < 200; ++iter) {
    lambda = 0.5 * (lo + hi);
    const double total = power_at(lambda, nullptr);
    if (std::abs(total - target) <= 1e-10 * target) break;
    if (total > target)
      lo = lambda;
    else
      hi = lambda;
  }

  // Closed-form level on the active set found above; kept only if it does not
  // change which channels are active.
  double weight_sum = 0.0;
  double floor_sum = 0.0;
  std::vector<RealVector> p_bisect = out.p;
  power_at(lambda, &p_bisect);
  for (std::size_t k = 0; k < gains.size(); ++k) {
    for (Eigen::Index i = 0; i < gains[k].size(); ++i) {
      if (p_bisect[k](i) > 0.0) {
        weight_sum += cfg.weights[k];
        floor_sum += sigma2 / (gains[k](i) * gains[k](i));
      }
    }
  }
  if (weight_sum > 0.0) {
    const double exact = weight_sum / (ln2 * (target + floor_sum));
    std::vector<RealVector> p_exact = out.p;
    power_at(exact, &p_exact);
    bool same_support = true;
    for (std::size_t k = 0; k < gains.size() && same_support; ++k)
      for (Eigen::Index i = 0; i < gains[k].size(); ++i)
        if ((p_exact[k](i) > 0.0) != (p_bisect[k](i) > 0.0)) same_support = false;
    if (same_support) {
      out.p = std::move(p_exact);
      out.lambda_dual = exact;
      return out;
    }
  }
  out.p = std::move(p_bisect);
  out.lambda_dual = lambda;
  return out;
}

/// Full BD design: F_k = B_k D_k diag(p_k)^(1/2), W_k = first d columns of U~_k.
inline BdResult bd_design(const SystemConfig& cfg, const ChannelSet& h) {
  require_valid(cfg);
  check_shapes(cfg, h);
  const std::size_t d = cfg.streams;

  BdResult out;
  auto& dec = out.design.decomposition;
  for (std::size_t k = 0; k < cfg.users; ++k) {
    const auto h_int = interference_matrix(h, k);
    ComplexMatrix b = null_space_basis(h_int, d, cfg.tx_antennas);
    dec.residual.push_back(h_int ? (*h_int * b).norm() : 0.0);
    dec.interference_norm.push_back(h_int ? h_int->norm() : 0.0);
    auto eff = effective_svd(h[k], b);
    dec.b.push_back(std::move(b));
    dec.d_mat.push_back(std::move(eff.d_mat));
    dec.lambda.push_back(std::move(eff.lambda));
    dec.u_tilde.push_back(std::move(eff.u_tilde));
  }
  out.design.power = water_fill(cfg, dec.lambda);

  for (std::size_t k = 0; k < cfg.users; ++k) {
    const RealVector root = out.design.power.p[k].cwiseSqrt();
    out.f.mats.push_back(dec.b[k] * dec.d_mat[k] * root.cast<Complex>().asDiagonal());
    out.w.mats.push_back(dec.u_tilde[k]);
  }
  return out;
}

/// Closed-form BD weighted sum-rate. Only meaningful when interference is
/// nulled; otherwise score the transceivers with weighted_sum_rate().
inline double bd_rate_closed_form(const SystemConfig& cfg, const BdDesign& design) {
  const auto& dec = design.decomposition;
  for (std::size_t k = 0; k < dec.residual.size(); ++k) {
    if (dec.residual[k] > 1e-6 * dec.interference_norm[k])
      throw InfeasibleError("bd_rate_closed_form: interference for user " + std::to_string(k) +
                            " is not nulled (leakage " + std::to_string(dec.residual[k]) +
                            "); use weighted_sum_rate on the BD transceivers instead");
  }
  return water_fill_objective(cfg, dec.lambda, design.power.p);
}

}  // namespace wsrpso
