#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

#include "vuix/attack_theory.hpp"
#include "vuix/stochastic_model.hpp"

namespace vuix {

/// Generator for one Monte Carlo trial: a 64-bit Mersenne Twister seeded from
/// (seed, trial) through std::seed_seq, so every trial owns an independent
/// stream regardless of which thread runs it.
std::mt19937_64 trial_stream(std::uint64_t seed, std::uint64_t trial);

/// Unbiased integer in [0, bound) by rejection; bound > 0.
std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t bound);

/// Attacked set drawn uniformly from all k-subsets of {0..m-1}; each attacked
/// sensor gets `variance` on the diagonal. Requires 0 <= k < m.
ExistingAttackState sample_attacked_set(std::size_t m, std::size_t k, std::mt19937_64& rng,
                                        double variance = 1.0);

struct MonteCarloOptions {
  std::size_t trials = 1000;
  std::uint64_t seed = 0;
  /// Diagonal entry given to every sampled attacked sensor.
  double existing_attack_variance = 1.0;
  /// Worker threads; 0 picks std::thread::hardware_concurrency().
  unsigned threads = 0;
};

struct MeasurementVuIxStats {
  double mean = 0.0;      // NaN when never uncompromised
  double variance = 0.0;  // unbiased; 0 when coverage < 2
  std::size_t coverage = 0;  // trials in which the measurement was free
};

struct RankPositionStats {
  std::size_t flow_count = 0;
  std::size_t injection_count = 0;
  double p_flow = 0.0;
  double p_injection = 0.0;
};

struct MonteCarloReport {
  std::size_t trials = 0;
  std::size_t k = 0;
  std::uint64_t seed = 0;
  CostParams params;
  double existing_attack_variance = 1.0;

  std::vector<MeasurementVuIxStats> per_measurement;  // size m
  /// Rank positions 1..m-k (index 0 is VuIx 1). Empty for unlabeled models.
  std::vector<RankPositionStats> positions;
  /// P[VuIx = j | measurement class], j = 1..m-k. Empty for unlabeled models.
  std::vector<double> flow_pmf;
  std::vector<double> injection_pmf;
  std::size_t flow_samples = 0;       // (trial, free flow measurement) pairs
  std::size_t injection_samples = 0;  // (trial, free injection measurement) pairs
};

/// Draws `trials` attacked sets of size k, ranks the free measurements in each
/// and aggregates VuIx statistics. Results depend only on the arguments, not
/// on options.threads.
MonteCarloReport monte_carlo_vuix(const SystemModel& model, std::size_t k,
                                  const CostParams& params, const MonteCarloOptions& options);

}  // namespace vuix
