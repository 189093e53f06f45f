#pragma once

// Reproducible random streams and Rayleigh channel draws.
//
// A stream is addressed by (master seed, purpose, realization, particle,
// iteration). The address is hashed into the seed of a private engine, so the
// sequence a task sees never depends on which worker ran it or in what order.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

#include "wsrpso/numerics.hpp"
#include "wsrpso/system_model.hpp"

namespace wsrpso {

enum class StreamPurpose : std::uint64_t {
  channel = 1,
  initialization = 2,
  velocity = 3,
  auxiliary = 4,
};

struct StreamId {
  StreamPurpose purpose = StreamPurpose::auxiliary;
  std::uint64_t realization = 0;
  std::uint64_t particle = 0;
  std::uint64_t iteration = 0;
};

namespace detail {

// splitmix64 finalizer
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t stream_key(std::uint64_t master_seed, const StreamId& id) {
  std::uint64_t h = mix64(master_seed);
  h = mix64(h ^ static_cast<std::uint64_t>(id.purpose));
  h = mix64(h ^ id.realization);
  h = mix64(h ^ id.particle);
  h = mix64(h ^ id.iteration);
  return h;
}

}  // namespace detail

class RngStream {
 public:
  RngStream(std::uint64_t master_seed, StreamId id)
      : master_seed_(master_seed), id_(id), engine_(detail::stream_key(master_seed, id)) {}

  std::uint64_t master_seed() const noexcept { return master_seed_; }
  const StreamId& id() const noexcept { return id_; }

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Standard normal via Box-Muller; the second variate of each pair is kept.
  double gaussian() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - uniform01();  // (0, 1]
    const double u2 = uniform01();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

  /// CN(0, 1): real and imaginary parts each N(0, 1/2).
  Complex complex_gaussian() {
    const double re = gaussian() * std::numbers::sqrt2 / 2.0;
    const double im = gaussian() * std::numbers::sqrt2 / 2.0;
    return {re, im};
  }

  ComplexMatrix complex_gaussian_matrix(Eigen::Index rows, Eigen::Index cols) {
    ComplexMatrix m(rows, cols);
    // Row-major fill order so the draw sequence matches the logical layout.
    for (Eigen::Index r = 0; r < rows; ++r)
      for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = complex_gaussian();
    return m;
  }

 private:
  std::uint64_t master_seed_;
  StreamId id_;
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// i.i.d. CN(0,1) channel matrices, one N_r x N_t block per user, drawn from
/// the given stream.
inline ChannelSet gen_channels(const SystemConfig& cfg, RngStream& stream) {
  ChannelSet h;
  h.mats.reserve(cfg.users);
  for (std::size_t k = 0; k < cfg.users; ++k)
    h.mats.push_back(stream.complex_gaussian_matrix(static_cast<Eigen::Index>(cfg.rx_antennas),
                                                    static_cast<Eigen::Index>(cfg.tx_antennas)));
  return h;
}

/// Channel realization `realization` for a master seed. Uses the channel
/// purpose only, so it is unaffected by anything the optimizer draws.
inline ChannelSet gen_channels(const SystemConfig& cfg, std::uint64_t master_seed, std::uint64_t realization) {
  RngStream stream(master_seed, StreamId{StreamPurpose::channel, realization, 0, 0});
  return gen_channels(cfg, stream);
}

}  // namespace wsrpso
