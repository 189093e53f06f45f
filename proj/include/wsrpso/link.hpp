#pragma once

// Objective pipeline: MMSE decoders, per-user rate, weighted sum-rate.
// Valid for any precoders, whether or not inter-user interference is nulled.

#include <algorithm>
#include <cmath>
#include <numbers>

#include "wsrpso/numerics.hpp"
#include "wsrpso/system_model.hpp"

namespace wsrpso {

/// Sum over users l (optionally skipping `skip`) of H_k F_l F_l^H H_k^H, plus
/// sigma^2 I. N_r x N_r, Hermitian positive definite for sigma^2 > 0.
inline ComplexMatrix received_covariance(const SystemConfig& cfg, const ChannelSet& h, const PrecoderSet& f,
                                         std::size_t k, std::ptrdiff_t skip = -1) {
  const auto nr = static_cast<Eigen::Index>(cfg.rx_antennas);
  ComplexMatrix c = cfg.noise_power * ComplexMatrix::Identity(nr, nr);
  for (std::size_t l = 0; l < f.size(); ++l) {
    if (static_cast<std::ptrdiff_t>(l) == skip) continue;
    const ComplexMatrix g = h[k] * f[l];
    c.noalias() += g * g.adjoint();
  }
  return hermitian_part(c);
}

/// Wiener receive filters W_k = (sum_l H_k F_l F_l^H H_k^H + sigma^2 I)^-1 H_k F_k.
inline DecoderSet mmse_decoders(const SystemConfig& cfg, const ChannelSet& h, const PrecoderSet& f) {
  check_shapes(cfg, h);
  check_shapes(cfg, f);
  DecoderSet w;
  w.mats.reserve(cfg.users);
  for (std::size_t k = 0; k < cfg.users; ++k)
    w.mats.push_back(hpd_solve(received_covariance(cfg, h, f, k), h[k] * f[k]));
  return w;
}

/// R_z = W_k^H (sum_{l != k} H_k F_l F_l^H H_k^H + sigma^2 I) W_k.
inline ComplexMatrix interference_covariance(const SystemConfig& cfg, const ChannelSet& h, const PrecoderSet& f,
                                             const ComplexMatrix& w_k, std::size_t k) {
  const ComplexMatrix q = received_covariance(cfg, h, f, k, static_cast<std::ptrdiff_t>(k));
  return hermitian_part(w_k.adjoint() * q * w_k);
}

inline ComplexMatrix interference_covariance(const SystemConfig& cfg, const ChannelSet& h, const PrecoderSet& f,
                                             const DecoderSet& w, std::size_t k) {
  return interference_covariance(cfg, h, f, w[k], k);
}

namespace detail {

// Relative singular-value cutoff below which a decoder column is treated as
// absent. The rate is invariant to W -> W A for invertible A, so a
// rank-deficient decoder is replaced by a full-rank basis of its range.
inline constexpr double kDecoderRankTol = 1e-10;

inline ComplexMatrix decoder_range(const ComplexMatrix& w) {
  Eigen::JacobiSVD<ComplexMatrix> s(w, Eigen::ComputeThinV);
  const auto& sv = s.singularValues();
  Eigen::Index rank = 0;
  while (rank < sv.size() && sv(rank) > kDecoderRankTol * sv(0)) ++rank;
  if (rank == w.cols()) return w;
  return w * s.matrixV().leftCols(rank);
}

}  // namespace detail

/// Rate of user k in bits/s/Hz:
///   log2 |I + W^H H F F^H H^H W R_z^-1|
/// evaluated as log2|R_z + S| - log2|R_z| with S the signal term.
/// Zero when F_k or W_k is zero. A rank-deficient W_k is reduced to a basis of
/// its column space (the streams it discards carry nothing).
inline double user_rate(const SystemConfig& cfg, const ChannelSet& h, const PrecoderSet& f, const DecoderSet& w,
                        std::size_t k) {
  if (f[k].squaredNorm() == 0.0 || w[k].squaredNorm() == 0.0) return 0.0;
  const ComplexMatrix wk = detail::decoder_range(w[k]);
  if (wk.cols() == 0) return 0.0;

  const ComplexMatrix r_z = interference_covariance(cfg, h, f, wk, k);
  const ComplexMatrix g = wk.adjoint() * h[k] * f[k];
  const ComplexMatrix signal = hermitian_part(g * g.adjoint());
  double with_signal = 0.0;
  double without = 0.0;
  try {
    without = logdet_hpd(r_z);
    with_signal = logdet_hpd(hermitian_part(r_z + signal));
  } catch (const SingularityError&) {
    throw DegenerateDecoderError(k);
  }
  return std::max(0.0, (with_signal - without) / std::numbers::ln2);
}

/// Sum_k w_k R_k, accumulated in user order.
inline double weighted_sum_rate(const SystemConfig& cfg, const ChannelSet& h, const PrecoderSet& f,
                                const DecoderSet& w) {
  check_shapes(cfg, h);
  check_shapes(cfg, f);
  check_shapes(cfg, w);
  double total = 0.0;
  for (std::size_t k = 0; k < cfg.users; ++k) {
    if (cfg.weights[k] == 0.0) continue;
    total += cfg.weights[k] * user_rate(cfg, h, f, w, k);
  }
  return total;
}

}  // namespace wsrpso
