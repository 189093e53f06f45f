#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "wsrpso/errors.hpp"
#include "wsrpso/numerics.hpp"

namespace wsrpso {

/// Scenario scalars shared by every algorithm. Noise power is one scalar for
/// all users; weights are used as given (no normalization).
struct SystemConfig {
  std::size_t users = 3;
  std::size_t tx_antennas = 6;
  std::size_t rx_antennas = 2;
  std::size_t streams = 1;
  double noise_power = 1.0;
  double p_max = 1.0;
  std::vector<double> weights{1.0, 1.0, 1.0};

  /// Whether block diagonalization can fully null inter-user interference,
  /// i.e. N_t - (K-1) N_r >= d.
  bool bd_feasible() const {
    const auto others = static_cast<long long>((users - 1) * rx_antennas);
    return static_cast<long long>(tx_antennas) - others >= static_cast<long long>(streams);
  }
};

/// A list of per-user matrices. The tag keeps channels, precoders, decoders and
/// velocities from being mixed up while sharing one container.
template <class Tag>
struct MatrixList {
  std::vector<ComplexMatrix> mats;

  MatrixList() = default;
  explicit MatrixList(std::vector<ComplexMatrix> m) : mats(std::move(m)) {}
  MatrixList(std::size_t count, Eigen::Index rows, Eigen::Index cols)
      : mats(count, ComplexMatrix::Zero(rows, cols)) {}

  std::size_t size() const noexcept { return mats.size(); }
  ComplexMatrix& operator[](std::size_t k) { return mats[k]; }
  const ComplexMatrix& operator[](std::size_t k) const { return mats[k]; }
  auto begin() noexcept { return mats.begin(); }
  auto end() noexcept { return mats.end(); }
  auto begin() const noexcept { return mats.begin(); }
  auto end() const noexcept { return mats.end(); }

  bool operator==(const MatrixList& other) const {
    if (mats.size() != other.mats.size()) return false;
    for (std::size_t k = 0; k < mats.size(); ++k) {
      if (mats[k].rows() != other.mats[k].rows() || mats[k].cols() != other.mats[k].cols()) return false;
      if (mats[k] != other.mats[k]) return false;
    }
    return true;
  }
};

struct ChannelTag {};
struct PrecoderTag {};
struct DecoderTag {};

/// H_k, each N_r x N_t.
using ChannelSet = MatrixList<ChannelTag>;
/// F_k, each N_t x d.
using PrecoderSet = MatrixList<PrecoderTag>;
/// W_k, each N_r x d.
using DecoderSet = MatrixList<DecoderTag>;

/// Result of validate(). Errors make the configuration unusable; notes are
/// informational.
struct ValidationReport {
  std::vector<std::string> errors;
  std::vector<std::string> notes;
  bool bd_feasible = false;

  bool ok() const noexcept { return errors.empty(); }
};

inline ValidationReport validate(const SystemConfig& cfg) {
  ValidationReport r;
  auto err = [&](std::string m) { r.errors.push_back(std::move(m)); };
  if (cfg.users < 1) err("users must be >= 1");
  if (cfg.tx_antennas < 1) err("nt (transmit antennas) must be >= 1");
  if (cfg.rx_antennas < 1) err("nr (receive antennas) must be >= 1");
  if (cfg.streams < 1) err("streams must be >= 1");
  if (cfg.streams > cfg.rx_antennas)
    err("streams <= nr violated: d=" + std::to_string(cfg.streams) + ", nr=" + std::to_string(cfg.rx_antennas));
  if (cfg.streams > cfg.tx_antennas)
    err("streams <= nt violated: d=" + std::to_string(cfg.streams) + ", nt=" + std::to_string(cfg.tx_antennas));
  if (!(cfg.noise_power > 0.0) || !std::isfinite(cfg.noise_power)) err("noise power must be finite and > 0");
  if (!(cfg.p_max > 0.0) || !std::isfinite(cfg.p_max)) err("p_max must be finite and > 0");
  if (cfg.weights.size() != cfg.users) {
    err("weights has length " + std::to_string(cfg.weights.size()) + " but users K=" + std::to_string(cfg.users));
  }
  bool any_positive = false;
  for (std::size_t k = 0; k < cfg.weights.size(); ++k) {
    const double w = cfg.weights[k];
    if (!(w >= 0.0) || !std::isfinite(w)) err("weight " + std::to_string(k + 1) + " must be finite and >= 0");
    if (w > 0.0) any_positive = true;
  }
  if (!any_positive) err("at least one weight must be > 0");

  if (cfg.users >= 1 && cfg.rx_antennas >= 1) {
    r.bd_feasible = cfg.bd_feasible();
    if (!r.bd_feasible)
      r.notes.push_back("nt - (users-1)*nr < streams: block diagonalization cannot fully null interference");
  }
  return r;
}

/// Throws ValidationError when validate() reports errors.
inline void require_valid(const SystemConfig& cfg) {
  auto r = validate(cfg);
  if (!r.ok()) throw ValidationError(std::move(r.errors));
}

namespace detail {

template <class Tag>
void require_shapes(const MatrixList<Tag>& list, std::size_t count, std::size_t rows, std::size_t cols,
                    const char* what) {
  if (list.size() != count)
    throw ValidationError(std::string(what) + ": expected " + std::to_string(count) + " matrices, got " +
                          std::to_string(list.size()));
  for (std::size_t k = 0; k < list.size(); ++k) {
    if (static_cast<std::size_t>(list[k].rows()) != rows || static_cast<std::size_t>(list[k].cols()) != cols)
      throw ValidationError(std::string(what) + " " + std::to_string(k) + ": expected " + std::to_string(rows) +
                            "x" + std::to_string(cols) + ", got " + dims(list[k]));
  }
}

}  // namespace detail

inline void check_shapes(const SystemConfig& cfg, const ChannelSet& h) {
  detail::require_shapes(h, cfg.users, cfg.rx_antennas, cfg.tx_antennas, "channel");
}
inline void check_shapes(const SystemConfig& cfg, const PrecoderSet& f) {
  detail::require_shapes(f, cfg.users, cfg.tx_antennas, cfg.streams, "precoder");
}
inline void check_shapes(const SystemConfig& cfg, const DecoderSet& w) {
  detail::require_shapes(w, cfg.users, cfg.rx_antennas, cfg.streams, "decoder");
}

/// Sum_k tr(F_k F_k^H).
inline double total_power(const PrecoderSet& f) {
  double p = 0.0;
  for (const auto& fk : f) p += fk.squaredNorm();
  return p;
}

}  // namespace wsrpso
