#pragma once

// Constrained particle swarm over precoder sets.
//
// Particle 1 starts at the BD design, the rest at random full-power points.
// Each iteration runs the inertia/cognitive/social velocity update, moves the
// particle, projects it radially back onto the power ball when it left it,
// recomputes the Wiener decoders and scores the weighted sum-rate. Iterations
// are synchronous: every particle in iteration k+1 sees the global best
// finalized at the end of iteration k.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <exception>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "wsrpso/bd.hpp"
#include "wsrpso/channel.hpp"
#include "wsrpso/errors.hpp"
#include "wsrpso/link.hpp"
#include "wsrpso/system_model.hpp"

namespace wsrpso {

enum class RandomMode {
  scalar_per_particle,  // one r1, r2 per particle per iteration
  per_entry,            // independent r1, r2 for every matrix entry
};

struct PsoParams {
  std::size_t swarm_size = 100;
  std::size_t max_iters = 300;
  double c0 = 0.7;
  double c1 = 1.494;
  double c2 = 1.494;
  RandomMode r_mode = RandomMode::scalar_per_particle;
  // Stop once the global best has not improved by more than 1e-9 for 100
  // consecutive iterations.
  bool plateau_stop = false;
  std::size_t workers = 1;
};

inline std::vector<std::string> validate_params(const PsoParams& p) {
  std::vector<std::string> errs;
  if (p.swarm_size < 1) errs.emplace_back("swarm-size must be >= 1");
  if (p.max_iters < 1) errs.emplace_back("iters must be >= 1");
  if (!(p.c0 >= 0.0) || !(p.c1 >= 0.0) || !(p.c2 >= 0.0)) errs.emplace_back("c0, c1, c2 must be >= 0");
  if (p.workers < 1) errs.emplace_back("workers must be >= 1");
  return errs;
}

struct VelocityTag {};
using Velocity = MatrixList<VelocityTag>;

struct Particle {
  PrecoderSet x;
  Velocity v;
  PrecoderSet pbest_x;
  double pbest_value = 0.0;
};

struct TracePoint {
  std::size_t iteration = 0;
  double gbest_value = 0.0;
};

struct SwarmState {
  std::vector<Particle> particles;
  PrecoderSet gbest_x;
  double gbest_value = 0.0;
  std::size_t iter = 0;
  std::vector<TracePoint> trace;
};

struct PsoResult {
  PrecoderSet gbest_x;
  double gbest_value = 0.0;
  DecoderSet w;
  std::vector<TracePoint> trace;
};

/// Addresses the optimizer's random streams: velocity draws use
/// (realization, particle, iteration), initial positions use
/// (realization, particle).
struct SwarmSeed {
  std::uint64_t master_seed = 0;
  std::uint64_t realization = 0;
};

/// Euclidean projection onto {sum_k |F_k|_F^2 <= P_max}: identity inside the
/// ball, common radial scaling outside it.
inline PrecoderSet project_to_power_ball(const PrecoderSet& f, double p_max) {
  const double p = total_power(f);
  if (p <= p_max) return f;
  const double scale = std::sqrt(p_max / p);
  PrecoderSet out = f;
  for (auto& fk : out) fk *= scale;
  return out;
}

/// V <- c0 V + c1 r1 (pbest - X) + c2 r2 (gbest - X).
/// `rng` needs a uniform01() member; in scalar mode r1 then r2 are drawn once.
template <class Uniform>
Velocity update_velocity(const Particle& p, const PrecoderSet& gbest_x, const PsoParams& params, Uniform& rng) {
  Velocity next;
  next.mats.reserve(p.x.size());
  if (params.r_mode == RandomMode::scalar_per_particle) {
    const double r1 = rng.uniform01();
    const double r2 = rng.uniform01();
    for (std::size_t k = 0; k < p.x.size(); ++k)
      next.mats.push_back(params.c0 * p.v[k] + (params.c1 * r1) * (p.pbest_x[k] - p.x[k]) +
                          (params.c2 * r2) * (gbest_x[k] - p.x[k]));
    return next;
  }
  for (std::size_t k = 0; k < p.x.size(); ++k) {
    ComplexMatrix vk(p.x[k].rows(), p.x[k].cols());
    for (Eigen::Index r = 0; r < vk.rows(); ++r) {
      for (Eigen::Index c = 0; c < vk.cols(); ++c) {
        const double r1 = rng.uniform01();
        const double r2 = rng.uniform01();
        vk(r, c) = params.c0 * p.v[k](r, c) + (params.c1 * r1) * (p.pbest_x[k](r, c) - p.x[k](r, c)) +
                   (params.c2 * r2) * (gbest_x[k](r, c) - p.x[k](r, c));
      }
    }
    next.mats.push_back(std::move(vk));
  }
  return next;
}

/// X <- X + V.
inline PrecoderSet update_position(const PrecoderSet& x, const Velocity& v) {
  if (x.size() != v.size()) throw ValidationError("update_position: size mismatch");
  PrecoderSet out = x;
  for (std::size_t k = 0; k < out.size(); ++k) out[k] += v[k];
  return out;
}

struct Evaluation {
  double value = 0.0;
  DecoderSet w;
};

/// Wiener decoders for f and the resulting weighted sum-rate.
inline Evaluation evaluate(const SystemConfig& cfg, const ChannelSet& h, const PrecoderSet& f) {
  Evaluation e;
  e.w = mmse_decoders(cfg, h, f);
  e.value = weighted_sum_rate(cfg, h, f, e.w);
  return e;
}

/// Random precoder set with CN(0,1) entries scaled to total power P_max.
inline PrecoderSet random_full_power_precoders(const SystemConfig& cfg, RngStream& rng) {
  PrecoderSet f;
  f.mats.reserve(cfg.users);
  for (std::size_t k = 0; k < cfg.users; ++k)
    f.mats.push_back(rng.complex_gaussian_matrix(static_cast<Eigen::Index>(cfg.tx_antennas),
                                                 static_cast<Eigen::Index>(cfg.streams)));
  const double p = total_power(f);
  if (p > 0.0) {
    const double scale = std::sqrt(cfg.p_max / p);
    for (auto& fk : f) fk *= scale;
  }
  return f;
}

namespace detail {

// Runs body(i) for i in [0, n) on up to `workers` threads. Each index is
// handled by exactly one thread; the first exception is rethrown.
template <class Body>
void parallel_for(std::size_t n, std::size_t workers, Body&& body) {
  workers = std::max<std::size_t>(1, std::min(workers, n));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> threads;
  threads.reserve(workers);
  for (std::size_t t = 0; t < workers; ++t) {
    threads.emplace_back([&, t] {
      try {
        for (std::size_t i = t; i < n; i += workers) body(i);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& th : threads) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

inline double evaluate_or_throw(const SystemConfig& cfg, const ChannelSet& h, const PrecoderSet& f,
                                std::size_t particle, std::size_t iteration) {
  try {
    return evaluate(cfg, h, f).value;
  } catch (const Error& e) {
    throw NumericalError("evaluation failed for particle " + std::to_string(particle + 1) + " at iteration " +
                         std::to_string(iteration) + ": " + e.what());
  }
}

}  // namespace detail

/// Builds the initial swarm: particle 0 at `seed_x`, the others random at full
/// power, zero velocities, personal bests at the initial positions.
inline SwarmState initialize_swarm(const SystemConfig& cfg, const ChannelSet& h, const PsoParams& params,
                                   const SwarmSeed& seed, const PrecoderSet& seed_x) {
  SwarmState s;
  s.particles.resize(params.swarm_size);
  const auto zero_velocity =
      Velocity(cfg.users, static_cast<Eigen::Index>(cfg.tx_antennas), static_cast<Eigen::Index>(cfg.streams));
  detail::parallel_for(params.swarm_size, params.workers, [&](std::size_t i) {
    Particle& p = s.particles[i];
    if (i == 0) {
      p.x = project_to_power_ball(seed_x, cfg.p_max);
    } else {
      RngStream rng(seed.master_seed, StreamId{StreamPurpose::initialization, seed.realization, i, 0});
      p.x = random_full_power_precoders(cfg, rng);
    }
    p.v = zero_velocity;
    p.pbest_x = p.x;
    p.pbest_value = detail::evaluate_or_throw(cfg, h, p.x, i, 0);
  });
  std::size_t best = 0;
  for (std::size_t i = 1; i < s.particles.size(); ++i)
    if (s.particles[i].pbest_value > s.particles[best].pbest_value) best = i;
  s.gbest_x = s.particles[best].pbest_x;
  s.gbest_value = s.particles[best].pbest_value;
  s.trace.push_back({0, s.gbest_value});
  return s;
}

/// One synchronous iteration: move every particle against the current global
/// best, then update personal and global bests in particle order.
inline void step_swarm(const SystemConfig& cfg, const ChannelSet& h, const PsoParams& params, const SwarmSeed& seed,
                       SwarmState& s) {
  const std::size_t iteration = s.iter + 1;
  std::vector<double> values(s.particles.size());
  detail::parallel_for(s.particles.size(), params.workers, [&](std::size_t i) {
    Particle& p = s.particles[i];
    RngStream rng(seed.master_seed, StreamId{StreamPurpose::velocity, seed.realization, i, iteration});
    p.v = update_velocity(p, s.gbest_x, params, rng);
    p.x = project_to_power_ball(update_position(p.x, p.v), cfg.p_max);
    values[i] = detail::evaluate_or_throw(cfg, h, p.x, i, iteration);
  });
  for (std::size_t i = 0; i < s.particles.size(); ++i) {
    Particle& p = s.particles[i];
    if (values[i] > p.pbest_value) {
      p.pbest_value = values[i];
      p.pbest_x = p.x;
    }
    if (p.pbest_value > s.gbest_value) {
      s.gbest_value = p.pbest_value;
      s.gbest_x = p.pbest_x;
    }
  }
  s.iter = iteration;
  s.trace.push_back({iteration, s.gbest_value});
}

/// Runs the full optimizer. Without `seed_x` the BD design is computed and
/// used as the first particle. Complexity is O(S K_max K^2 N_t^3).
inline PsoResult optimize(const SystemConfig& cfg, const ChannelSet& h, const PsoParams& params,
                          const SwarmSeed& seed, const std::optional<PrecoderSet>& seed_x = std::nullopt) {
  require_valid(cfg);
  check_shapes(cfg, h);
  if (auto errs = validate_params(params); !errs.empty()) throw ValidationError(std::move(errs));
  const PrecoderSet start = seed_x ? *seed_x : bd_design(cfg, h).f;
  check_shapes(cfg, start);

  SwarmState s = initialize_swarm(cfg, h, params, seed, start);
  double plateau_ref = s.gbest_value;
  std::size_t stale = 0;
  while (s.iter < params.max_iters) {
    step_swarm(cfg, h, params, seed, s);
    if (params.plateau_stop) {
      if (s.gbest_value > plateau_ref + 1e-9) {
        plateau_ref = s.gbest_value;
        stale = 0;
      } else if (++stale >= 100) {
        break;
      }
    }
  }

  PsoResult out;
  out.gbest_x = s.gbest_x;
  out.gbest_value = s.gbest_value;
  out.w = mmse_decoders(cfg, h, s.gbest_x);
  out.trace = std::move(s.trace);
  return out;
}

}  // namespace wsrpso
