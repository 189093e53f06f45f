// Acceptance suite. Runs every exit criterion at its pinned tolerance and
// prints one PASS/FAIL line per criterion. Exit status is non-zero if any
// criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "test_support.hpp"
#include "wsrpso/wsrpso.hpp"

using namespace wsrpso;
using wsrpso::testing::Gen;
using wsrpso::testing::make_config;
using wsrpso::testing::three_user_config;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

// Criterion 4 is checked on every optimizer run made anywhere in this suite.
struct DominanceLedger {
  std::size_t runs = 0;
  std::size_t violations = 0;
  double worst_margin = 1e300;  // min over runs of (pso - bd)

  void record(const std::vector<TracePoint>& trace, double pso, double bd) {
    ++runs;
    bool ok = pso >= bd - 1e-9;
    for (std::size_t i = 1; i < trace.size(); ++i)
      if (trace[i].gbest_value < trace[i - 1].gbest_value) ok = false;
    if (!ok) ++violations;
    worst_margin = std::min(worst_margin, pso - bd);
  }
};

DominanceLedger g_dominance;

struct RunRecord {
  std::vector<TracePoint> trace;
  double pso = 0.0;
  double bd = 0.0;
};

RunRecord run_checked(const SystemConfig& cfg, const ChannelSet& h, const PsoParams& params, const SwarmSeed& seed) {
  const auto bd = bd_design(cfg, h);
  RunRecord r;
  r.bd = weighted_sum_rate(cfg, h, bd.f, bd.w);
  auto res = optimize(cfg, h, params, seed, bd.f);
  r.pso = res.gbest_value;
  r.trace = std::move(res.trace);
  g_dominance.record(r.trace, r.pso, r.bd);
  return r;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

// 1. Closed-form BD rate equals the general evaluator; cross interference nulled.
Outcome bd_self_consistency() {
  Gen g(101);
  double worst_rate_gap = 0.0, worst_leak = 0.0;
  for (std::size_t d : {1u, 2u}) {
    for (int trial = 0; trial < 50; ++trial) {
      const auto cfg = three_user_config(6, d, p_max_from_snr_db(g.uniform(0.0, 25.0)));
      const auto h = g.channels(cfg);
      const auto bd = bd_design(cfg, h);
      worst_rate_gap = std::max(worst_rate_gap,
                                std::abs(bd_rate_closed_form(cfg, bd.design) - weighted_sum_rate(cfg, h, bd.f, bd.w)));
      for (std::size_t k = 0; k < 3; ++k)
        for (std::size_t l = 0; l < 3; ++l)
          if (l != k) worst_leak = std::max(worst_leak, (h[k] * bd.f[l]).norm());
    }
  }
  return {worst_rate_gap <= 1e-9 && worst_leak <= 1e-7,
          "max |closed-form - general| = " + fmt(worst_rate_gap) + " (<= 1e-9), max |H_k F_l|_F = " +
              fmt(worst_leak) + " (<= 1e-7)"};
}

// 2. Water-filling against grid search on the power simplex.
Outcome water_filling_oracle() {
  Gen g(202);
  const std::vector<std::pair<std::size_t, std::size_t>> shapes{{1, 1}, {1, 2}, {2, 1}, {1, 3}, {3, 1}};
  double worst_gap = 0.0, worst_sum = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto [k, d] = shapes[static_cast<std::size_t>(trial) % shapes.size()];
    std::vector<double> weights(k);
    for (auto& w : weights) w = g.uniform(0.0, 1.0);
    weights[static_cast<std::size_t>(g.integer(0, static_cast<int>(k) - 1))] = g.uniform(0.2, 1.0);
    auto cfg = make_config(k, 4, 3, d, g.uniform(0.1, 3.0), weights);
    std::vector<RealVector> gains(k, RealVector(static_cast<Eigen::Index>(d)));
    std::vector<wsrpso::testing::WfChannel> flat;
    for (std::size_t u = 0; u < k; ++u)
      for (std::size_t i = 0; i < d; ++i) {
        gains[u](static_cast<Eigen::Index>(i)) = g.uniform(0.05, 3.0);
        flat.push_back({weights[u], gains[u](static_cast<Eigen::Index>(i))});
      }
    const auto a = water_fill(cfg, gains);
    double total = 0.0;
    for (const auto& p : a.p) total += p.sum();
    const double value = water_fill_objective(cfg, gains, a.p);
    const double grid = wsrpso::testing::wf_grid_best(flat, cfg.p_max, cfg.noise_power, 1e-6);
    worst_gap = std::max(worst_gap, std::max(0.0, grid - value));
    worst_sum = std::max(worst_sum, std::abs(total - cfg.p_max));
  }
  return {worst_gap <= 1e-9 && worst_sum <= 1e-8,
          "max objective shortfall vs grid = " + fmt(worst_gap) + " (<= 1e-9), max |sum p - P_max| = " +
              fmt(worst_sum) + " (<= 1e-8)"};
}

// 3. Radial projection against a line search over feasible scalings.
Outcome projection_oracle() {
  Gen g(303);
  double worst_gap = 0.0, worst_idem = 0.0;
  bool feasible_unchanged = true;
  for (int trial = 0; trial < 100; ++trial) {
    const auto cfg = three_user_config(g.integer(0, 1) ? 6 : 4, static_cast<std::size_t>(g.integer(1, 2)), g.uniform(0.1, 2.0));
    const auto f = g.precoders(cfg, g.uniform(1.0, 3.0));
    const double p = total_power(f);
    const auto proj = project_to_power_ball(f, cfg.p_max);
    double dist = 0.0;
    for (std::size_t k = 0; k < 3; ++k) dist += (proj[k] - f[k]).squaredNorm();

    const double t_max = std::sqrt(cfg.p_max / p);
    const double step = 1e-7;
    double best = 1e300;
    const auto n = static_cast<long long>(std::ceil(t_max / step));
    for (long long i = 0; i <= n; ++i) {
      const double t = std::min(t_max, static_cast<double>(i) * step);
      best = std::min(best, (1.0 - t) * (1.0 - t) * p);
    }
    worst_gap = std::max(worst_gap, std::abs(dist - best));

    const auto twice = project_to_power_ball(proj, cfg.p_max);
    for (std::size_t k = 0; k < 3; ++k) worst_idem = std::max(worst_idem, (twice[k] - proj[k]).cwiseAbs().maxCoeff());

    const auto inside = g.precoders(cfg, 0.01);
    if (total_power(inside) <= cfg.p_max && !(project_to_power_ball(inside, cfg.p_max) == inside))
      feasible_unchanged = false;
  }
  return {worst_gap <= 1e-10 && worst_idem <= 1e-12 && feasible_unchanged,
          "max objective gap = " + fmt(worst_gap) + " (<= 1e-10), idempotence error = " + fmt(worst_idem) +
              ", feasible points unchanged = " + (feasible_unchanged ? "yes" : "no")};
}

// 5. Convergence shape on the three-user 6x2 single-stream system.
Outcome convergence_shape() {
  const auto cfg = three_user_config(6, 1, p_max_from_snr_db(10.0));
  PsoParams params;
  params.swarm_size = 100;
  params.max_iters = 300;
  std::size_t converged = 0;
  std::ostringstream per_seed;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto h = gen_channels(cfg, seed, 0);
    const auto r = run_checked(cfg, h, params, SwarmSeed{seed, 0});
    const double final_value = r.trace.at(300).gbest_value;
    const double at150 = r.trace.at(150).gbest_value;
    const bool ok = final_value - at150 <= 0.01 * std::abs(final_value);
    converged += ok ? 1 : 0;
    per_seed << (ok ? '+' : '-');
  }
  return {converged >= 16, std::to_string(converged) + "/20 seeds within 1% of final by iteration 150 (>= 16) [" +
                               per_seed.str() + "]"};
}

struct SweepMeans {
  std::vector<double> snr;
  std::vector<double> pso;
  std::vector<double> bd;
};

SweepMeans sweep(std::size_t nt, std::size_t d) {
  ExperimentSpec spec;
  spec.mode = Mode::sweep;
  spec.system = three_user_config(nt, d);
  spec.snr_db_list = {0, 5, 10, 15, 20, 25};
  spec.n_realizations = 20;
  spec.pso.swarm_size = 100;
  spec.pso.max_iters = 300;
  spec.master_seed = 2024;

  SweepMeans out;
  for (double snr : spec.snr_db_list) {
    SystemConfig cfg = spec.system;
    cfg.p_max = p_max_from_snr_db(snr);
    double pso = 0.0, bd = 0.0;
    for (std::size_t r = 0; r < spec.n_realizations; ++r) {
      const auto h = gen_channels(cfg, spec.master_seed, r);
      const auto rec = run_checked(cfg, h, spec.pso, SwarmSeed{spec.master_seed, r});
      pso += rec.pso;
      bd += rec.bd;
    }
    out.snr.push_back(snr);
    out.pso.push_back(pso / static_cast<double>(spec.n_realizations));
    out.bd.push_back(bd / static_cast<double>(spec.n_realizations));
  }
  std::cerr << "  sweep (" << nt << "x2," << d << ")^3:";
  for (std::size_t i = 0; i < out.snr.size(); ++i)
    std::cerr << "  " << out.snr[i] << "dB pso=" << fmt(out.pso[i]) << " bd=" << fmt(out.bd[i]);
  std::cerr << '\n';
  return out;
}

// 6. Trend checks on the SNR sweeps.
Outcome sweep_trends() {
  const auto six = sweep(6, 1);
  const double gap0 = six.pso.front() - six.bd.front();
  const double gap25 = six.pso.back() - six.bd.back();
  const bool a = gap0 > gap25;
  std::string detail = "(a) 6x2,1 gap 0dB = " + fmt(gap0) + " > gap 25dB = " + fmt(gap25) + (a ? " ok" : " FAILED");
  bool b = true;
  for (std::size_t d : {1u, 2u}) {
    const auto four = sweep(4, d);
    // indices 3 and 5 are 15 dB and 25 dB
    const double bd_rise = four.bd[5] - four.bd[3];
    const double pso_rise = four.pso[5] - four.pso[3];
    const bool ok = bd_rise < 0.5 * pso_rise;
    b = b && ok;
    detail += "; (b) 4x2," + std::to_string(d) + " BD rise 15->25dB = " + fmt(bd_rise) + " < half PSO rise " +
              fmt(pso_rise) + (ok ? " ok" : " FAILED");
  }
  return {a && b, detail};
}

// 7. Randomized property suites, 200 trials each.
Outcome property_suites() {
  Gen g(707);
  std::size_t failures = 0;
  std::ostringstream detail;
  auto suite = [&](const char* name, const std::function<bool(int)>& trial) {
    std::size_t f = 0;
    for (int i = 0; i < 200; ++i)
      if (!trial(i)) ++f;
    failures += f;
    detail << name << '=' << f << ' ';
  };

  suite("mmse-local-opt", [&](int) {
    const auto cfg = three_user_config(g.integer(0, 1) ? 6 : 4, 1, g.uniform(0.5, 300.0));
    const auto h = g.channels(cfg);
    const auto f = g.precoders(cfg);
    const auto w = mmse_decoders(cfg, h, f);
    for (std::size_t k = 0; k < 3; ++k) {
      const double base = wsrpso::testing::mse_oracle(cfg, h, f, w[k], k);
      for (int probe = 0; probe < 50; ++probe)
        if (wsrpso::testing::mse_oracle(cfg, h, f, w[k] + 1e-3 * g.matrix(2, 1), k) < base - 1e-12) return false;
    }
    return true;
  });

  suite("rate-nonneg", [&](int) {
    const auto cfg = three_user_config(g.integer(0, 1) ? 6 : 4, static_cast<std::size_t>(g.integer(1, 2)),
                                  g.uniform(0.01, 1000.0));
    const auto h = g.channels(cfg);
    const auto f = g.precoders(cfg, g.uniform(0.01, 10.0));
    DecoderSet w;
    for (std::size_t k = 0; k < 3; ++k) w.mats.push_back(g.matrix(2, static_cast<Eigen::Index>(cfg.streams)));
    const auto wm = mmse_decoders(cfg, h, f);
    for (std::size_t k = 0; k < 3; ++k)
      if (user_rate(cfg, h, f, w, k) < 0.0 || user_rate(cfg, h, f, wm, k) < 0.0) return false;
    return true;
  });

  suite("rotation-invariance", [&](int) {
    const auto cfg = three_user_config(g.integer(0, 1) ? 6 : 4, 2, g.uniform(0.5, 300.0));
    const auto h = g.channels(cfg);
    const auto f = g.precoders(cfg);
    auto rot = f;
    for (auto& fk : rot) fk = fk * g.unitary(2);
    const auto w = mmse_decoders(cfg, h, f);
    const auto wr = mmse_decoders(cfg, h, rot);
    for (std::size_t k = 0; k < 3; ++k)
      if (std::abs(user_rate(cfg, h, f, w, k) - user_rate(cfg, h, rot, wr, k)) > 1e-9) return false;
    return std::abs(total_power(f) - total_power(rot)) <= 1e-12 * std::max(1.0, total_power(f));
  });

  suite("rng-worker-determinism", [&](int i) {
    const auto cfg = three_user_config(i % 2 ? 6 : 4, static_cast<std::size_t>(1 + i % 2), g.uniform(0.5, 100.0));
    const auto h = gen_channels(cfg, static_cast<std::uint64_t>(i), 0);
    PsoParams params;
    params.swarm_size = 6;
    params.max_iters = 4;
    params.r_mode = i % 3 == 0 ? RandomMode::per_entry : RandomMode::scalar_per_particle;
    params.workers = 1;
    const auto a = run_checked(cfg, h, params, SwarmSeed{static_cast<std::uint64_t>(i), 0});
    params.workers = static_cast<std::size_t>(2 + i % 3);
    const auto b = run_checked(cfg, h, params, SwarmSeed{static_cast<std::uint64_t>(i), 0});
    if (a.trace.size() != b.trace.size()) return false;
    for (std::size_t t = 0; t < a.trace.size(); ++t)
      if (a.trace[t].gbest_value != b.trace[t].gbest_value) return false;
    return true;
  });

  suite("svd-contract", [&](int i) {
    const std::vector<std::pair<int, int>> shapes{{4, 6}, {6, 6}, {2, 6}, {4, 4}, {2, 1}, {2, 2}, {6, 4}};
    const auto [m, n] = shapes[static_cast<std::size_t>(i) % shapes.size()];
    const ComplexMatrix a = g.matrix(m, n);
    const auto s = svd(a);
    ComplexMatrix sig = ComplexMatrix::Zero(m, n);
    for (Eigen::Index j = 0; j < s.sigma.size(); ++j) {
      if (s.sigma(j) < 0.0 || (j > 0 && s.sigma(j) > s.sigma(j - 1))) return false;
      sig(j, j) = s.sigma(j);
    }
    return (s.u * sig * s.v.adjoint() - a).norm() <= 1e-10 * std::max(1.0, a.norm()) &&
           (s.u.adjoint() * s.u - ComplexMatrix::Identity(m, m)).norm() <= 1e-10 &&
           (s.v.adjoint() * s.v - ComplexMatrix::Identity(n, n)).norm() <= 1e-10;
  });

  return {failures == 0, "failures per suite: " + detail.str()};
}

// 4. Dominance and monotonicity, including a dedicated pass over all systems.
Outcome dominance_and_monotonicity() {
  PsoParams params;
  params.swarm_size = 30;
  params.max_iters = 60;
  for (std::size_t nt : {6u, 4u})
    for (std::size_t d : {1u, 2u})
      for (double snr : {0.0, 10.0, 25.0})
        for (std::uint64_t seed = 1; seed <= 5; ++seed) {
          const auto cfg = three_user_config(nt, d, p_max_from_snr_db(snr));
          run_checked(cfg, gen_channels(cfg, seed, 0), params, SwarmSeed{seed, 0});
        }
  return {g_dominance.violations == 0 && g_dominance.runs > 0,
          std::to_string(g_dominance.runs) + " runs, " + std::to_string(g_dominance.violations) +
              " violations, min(PSO - BD) = " + fmt(g_dominance.worst_margin)};
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<Outcome()> run;
  };
  // Criterion 4 is reported last so that it covers every run made by the others.
  const std::vector<Criterion> criteria{
      {"1 BD self-consistency", bd_self_consistency},
      {"2 water-filling oracle", water_filling_oracle},
      {"3 projection oracle", projection_oracle},
      {"5 convergence shape", convergence_shape},
      {"6 SNR-sweep trends", sweep_trends},
      {"7 property suites", property_suites},
      {"4 PSO dominance and monotonicity", dominance_and_monotonicity},
  };
  bool all = true;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::cout << (o.pass ? "PASS " : "FAIL ") << c.name << ": " << o.detail << " [" << fmt(secs) << " s]"
              << std::endl;
    all = all && o.pass;
  }
  return all ? 0 : 1;
}
