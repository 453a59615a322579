#include "vuix/monte_carlo.hpp"

#include <algorithm>
#include <exception>
#include <limits>
#include <numeric>
#include <string>
#include <thread>

#include "vuix/errors.hpp"
#include "vuix/vulnerability.hpp"

namespace vuix {

namespace {

// Integer tallies; merging them is exact, so the result does not depend on
// how trials are split between threads.
struct Tally {
  std::vector<std::uint64_t> sum;
  std::vector<std::uint64_t> sum_sq;
  std::vector<std::uint64_t> coverage;
  std::vector<std::uint64_t> position_flow;
  std::vector<std::uint64_t> position_injection;

  Tally(std::size_t m, std::size_t positions)
      : sum(m), sum_sq(m), coverage(m), position_flow(positions), position_injection(positions) {}

  void merge(const Tally& other) {
    auto add = [](auto& into, const auto& from) {
      for (std::size_t i = 0; i < into.size(); ++i) into[i] += from[i];
    };
    add(sum, other.sum);
    add(sum_sq, other.sum_sq);
    add(coverage, other.coverage);
    add(position_flow, other.position_flow);
    add(position_injection, other.position_injection);
  }
};

void run_trials(const SystemModel& model, std::size_t k, const CostParams& params,
                const MonteCarloOptions& options, std::size_t begin, std::size_t end,
                Tally& tally) {
  const auto m = static_cast<std::size_t>(model.measurements());
  const auto& labels = model.jacobian().rows;
  for (std::size_t trial = begin; trial < end; ++trial) {
    auto rng = trial_stream(options.seed, trial);
    const auto state = sample_attacked_set(m, k, rng, options.existing_attack_variance);
    const auto ranking = vuix_ranking(model, state, params);
    for (std::size_t pos = 0; pos < ranking.order.size(); ++pos) {
      const auto i = ranking.order[pos];
      const std::uint64_t vuix = pos + 1;
      tally.sum[i] += vuix;
      tally.sum_sq[i] += vuix * vuix;
      tally.coverage[i] += 1;
      if (!labels.empty()) {
        (labels[i].is_flow() ? tally.position_flow : tally.position_injection)[pos] += 1;
      }
    }
  }
}

}  // namespace

std::mt19937_64 trial_stream(std::uint64_t seed, std::uint64_t trial) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(trial), static_cast<std::uint32_t>(trial >> 32)};
  return std::mt19937_64(seq);
}

std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t bound) {
  // Reject the top partial block so every residue is equally likely.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t x = rng();
  while (x >= limit) x = rng();
  return x % bound;
}

ExistingAttackState sample_attacked_set(std::size_t m, std::size_t k, std::mt19937_64& rng,
                                        double variance) {
  if (k >= m) {
    throw InvalidK("k must be below the number of measurements (" + std::to_string(m) +
                   "), got " + std::to_string(k));
  }
  // Partial Fisher-Yates: the first k slots form a uniform k-subset.
  std::vector<std::size_t> pool(m);
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  for (std::size_t j = 0; j < k; ++j) {
    const auto r = j + static_cast<std::size_t>(uniform_below(rng, m - j));
    std::swap(pool[j], pool[r]);
  }
  std::vector<std::size_t> attacked(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(k));
  std::sort(attacked.begin(), attacked.end());
  return ExistingAttackState::from_set(static_cast<Eigen::Index>(m), attacked, variance);
}

MonteCarloReport monte_carlo_vuix(const SystemModel& model, std::size_t k,
                                  const CostParams& params, const MonteCarloOptions& options) {
  const auto m = static_cast<std::size_t>(model.measurements());
  if (k >= m) {
    throw InvalidK("k must be below the number of measurements (" + std::to_string(m) +
                   "), got " + std::to_string(k));
  }
  if (options.trials < 1) throw InvalidTrials("trials must be at least 1");
  if (!(options.existing_attack_variance > 0.0)) {
    throw ConfigError("existing attack variance must be positive");
  }

  const std::size_t positions = m - k;
  unsigned threads = options.threads != 0 ? options.threads : std::thread::hardware_concurrency();
  threads = static_cast<unsigned>(
      std::clamp<std::size_t>(threads == 0 ? 1 : threads, 1, options.trials));

  std::vector<Tally> tallies(threads, Tally(m, positions));
  std::vector<std::exception_ptr> errors(threads);
  const std::size_t chunk = (options.trials + threads - 1) / threads;
  auto work = [&](unsigned t) {
    const std::size_t begin = std::min(options.trials, t * chunk);
    const std::size_t end = std::min(options.trials, begin + chunk);
    try {
      run_trials(model, k, params, options, begin, end, tallies[t]);
    } catch (...) {
      errors[t] = std::current_exception();
    }
  };
  if (threads == 1) {
    work(0);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work, t);
  }
  for (const auto& error : errors) {
    if (error) std::rethrow_exception(error);
  }
  Tally total(m, positions);
  for (const auto& tally : tallies) total.merge(tally);

  MonteCarloReport report;
  report.trials = options.trials;
  report.k = k;
  report.seed = options.seed;
  report.params = params;
  report.existing_attack_variance = options.existing_attack_variance;

  report.per_measurement.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    auto& stats = report.per_measurement[i];
    const std::uint64_t n = total.coverage[i];
    stats.coverage = n;
    if (n == 0) {
      stats.mean = std::numeric_limits<double>::quiet_NaN();
      continue;
    }
    stats.mean = static_cast<double>(total.sum[i]) / static_cast<double>(n);
    if (n >= 2) {
      const auto numerator = static_cast<unsigned __int128>(n) * total.sum_sq[i] -
                             static_cast<unsigned __int128>(total.sum[i]) * total.sum[i];
      stats.variance = static_cast<double>(numerator) / (static_cast<double>(n) *
                                                         static_cast<double>(n - 1));
    }
  }

  if (model.jacobian().labeled()) {
    report.positions.resize(positions);
    report.flow_pmf.assign(positions, 0.0);
    report.injection_pmf.assign(positions, 0.0);
    for (std::size_t pos = 0; pos < positions; ++pos) {
      report.flow_samples += total.position_flow[pos];
      report.injection_samples += total.position_injection[pos];
    }
    const auto trials = static_cast<double>(options.trials);
    for (std::size_t pos = 0; pos < positions; ++pos) {
      auto& p = report.positions[pos];
      p.flow_count = total.position_flow[pos];
      p.injection_count = total.position_injection[pos];
      p.p_flow = static_cast<double>(p.flow_count) / trials;
      p.p_injection = static_cast<double>(p.injection_count) / trials;
      if (report.flow_samples > 0) {
        report.flow_pmf[pos] =
            static_cast<double>(p.flow_count) / static_cast<double>(report.flow_samples);
      }
      if (report.injection_samples > 0) {
        report.injection_pmf[pos] =
            static_cast<double>(p.injection_count) / static_cast<double>(report.injection_samples);
      }
    }
  }
  return report;
}

}  // namespace vuix
