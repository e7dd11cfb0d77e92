#pragma once

// Quality functionals and the choices built on them: the measurement-count
// trade-off Phi(n) = V(1 - Perr(n)) - c n, program quality, the Phi > Phi0
// filter and uniform random selection among surviving programs.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "aprior/error.hpp"
#include "aprior/kb.hpp"
#include "aprior/perception.hpp"
#include "aprior/rng.hpp"

namespace aprior {

enum class EvalMode { Auto, Exact, MonteCarlo };

constexpr std::string_view to_string(EvalMode mode) noexcept {
  switch (mode) {
    case EvalMode::Auto: return "auto";
    case EvalMode::Exact: return "exact";
    case EvalMode::MonteCarlo: return "mc";
  }
  return "auto";
}

inline EvalMode parse_mode(std::string_view text) {
  if (text == "auto") return EvalMode::Auto;
  if (text == "exact") return EvalMode::Exact;
  if (text == "mc") return EvalMode::MonteCarlo;
  throw Error(Errc::InvalidArgument, "unknown mode \"" + std::string(text) + "\"");
}

inline constexpr double kExactSequenceBudget = 1e6;
inline constexpr std::size_t kMonteCarloSamples = 100000;
inline constexpr std::uint64_t kMonteCarloSeed = 0x5eed'acc0'0000'0001ULL;

struct MeasurementEconomy {
  double value = 1.0;  // payoff of acting on a correct recognition
  double cost = 0.0;   // per measurement
  double phi0 = 0.0;   // program quality threshold
  std::size_t n_max = 15;

  void validate() const {
    if (!(value >= 0.0) || !(cost >= 0.0) || !std::isfinite(value) || !std::isfinite(cost))
      throw Error(Errc::InvalidArgument, "value and cost must be finite and >= 0");
    if (!std::isfinite(phi0)) throw Error(Errc::InvalidArgument, "phi0 must be finite");
    if (n_max < 1) throw Error(Errc::InvalidCount, "n_max must be >= 1");
  }
};

struct Probability {
  double value = 0.0;
  EvalMode mode = EvalMode::Exact;  // Exact or MonteCarlo, never Auto
};

namespace detail {

inline bool sequences_within_budget(std::size_t n, Symbol alphabet) {
  double total = 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    total *= alphabet;
    if (total > kExactSequenceBudget) return false;
  }
  return true;
}

// Sums the multinomial probability of every symbol-count vector whose
// majority (lowest symbol on ties) is the true symbol. Each count vector
// stands for all sequences with those counts.
inline double exact_majority_accuracy(std::size_t n, const ChannelParams& params, Symbol truth) {
  const std::size_t a = params.alphabet;
  const double keep = 1.0 - params.epsilon;
  const double swap = params.epsilon / static_cast<double>(a - 1);
  std::vector<double> log_factorial(n + 1, 0.0);
  for (std::size_t i = 2; i <= n; ++i) log_factorial[i] = log_factorial[i - 1] + std::log(static_cast<double>(i));

  std::vector<std::size_t> counts(a, 0);
  double total = 0.0;
  // Iterative enumeration of compositions of n into a parts.
  const auto visit = [&] {
    const std::size_t c_true = counts[truth];
    for (std::size_t s = 0; s < a; ++s) {
      if (s == truth) continue;
      if (s < truth ? counts[s] >= c_true : counts[s] > c_true) return;
    }
    const std::size_t c_other = n - c_true;
    if ((c_true > 0 && keep == 0.0) || (c_other > 0 && swap == 0.0)) return;
    double log_coef = log_factorial[n];
    for (std::size_t c : counts) log_coef -= log_factorial[c];
    double p = std::exp(log_coef);
    p *= std::pow(keep, static_cast<double>(c_true));
    p *= std::pow(swap, static_cast<double>(c_other));
    total += p;
  };
  const auto recurse = [&](auto&& self, std::size_t index, std::size_t left) -> void {
    if (index + 1 == a) {
      counts[index] = left;
      visit();
      return;
    }
    for (std::size_t c = 0; c <= left; ++c) {
      counts[index] = c;
      self(self, index + 1, left - c);
    }
  };
  recurse(recurse, 0, n);
  return std::clamp(total, 0.0, 1.0);
}

inline double monte_carlo_majority_accuracy(std::size_t n, const ChannelParams& params, Symbol truth,
                                            std::uint64_t seed) {
  SplitMix64 rng(seed);
  std::vector<std::size_t> counts(params.alphabet);
  std::size_t wins = 0;
  for (std::size_t sample = 0; sample < kMonteCarloSamples; ++sample) {
    std::fill(counts.begin(), counts.end(), 0);
    for (std::size_t i = 0; i < n; ++i) {
      Symbol s = truth;
      if (rng.bernoulli(params.epsilon)) {
        const auto r = static_cast<Symbol>(rng.below(params.alphabet - 1));
        s = r < truth ? r : r + 1;
      }
      ++counts[s];
    }
    if (static_cast<Symbol>(std::max_element(counts.begin(), counts.end()) - counts.begin()) == truth) ++wins;
  }
  return static_cast<double>(wins) / static_cast<double>(kMonteCarloSamples);
}

}  // namespace detail

/// P(majority of n noisy copies of one feature equals true_symbol). Auto
/// evaluates exactly while a^n <= 1e6 and by Monte Carlo (1e5 samples)
/// beyond; Exact and MonteCarlo force a route.
inline Probability feature_accuracy(std::size_t n, const ChannelParams& params, Symbol true_symbol,
                                    EvalMode mode = EvalMode::Auto, std::uint64_t mc_seed = kMonteCarloSeed) {
  if (n == 0) throw Error(Errc::InvalidCount, "measurement count must be >= 1");
  params.validate();
  if (true_symbol >= params.alphabet) throw Error(Errc::InvalidArgument, "true symbol outside alphabet");
  if (mode == EvalMode::Auto)
    mode = detail::sequences_within_budget(n, params.alphabet) ? EvalMode::Exact : EvalMode::MonteCarlo;
  if (mode == EvalMode::Exact) return {detail::exact_majority_accuracy(n, params, true_symbol), EvalMode::Exact};
  // Distinct (n, symbol) pairs get distinct sample streams.
  const std::uint64_t seed = mc_seed ^ (static_cast<std::uint64_t>(n) << 32) ^ true_symbol;
  return {detail::monte_carlo_majority_accuracy(n, params, true_symbol, seed), EvalMode::MonteCarlo};
}

struct RecognitionError {
  double perr = 0.0;
  EvalMode mode = EvalMode::Exact;
};

/// Perr(n) = 1 - prod over features of the per-feature majority accuracy,
/// for a leaf that fixes every feature.
inline RecognitionError recognition_error(const KnowledgeBase& kb, ObjectId node, std::size_t n,
                                          const ChannelParams& params, EvalMode mode = EvalMode::Auto) {
  if (!kb.contains(node)) throw Error(Errc::UnknownObject, "object " + std::to_string(node.value));
  if (!kb.is_leaf(node)) throw Error(Errc::NotLeaf, "object " + std::to_string(node.value) + " is not a leaf");
  const Predicate& predicate = kb.predicate(node);
  if (predicate.size() != kb.dimension())
    throw Error(Errc::UnderconstrainedLeaf,
                "object " + std::to_string(node.value) + " does not constrain every feature");
  double correct = 1.0;
  EvalMode used = EvalMode::Exact;
  for (const Constraint& c : predicate.constraints) {
    const Probability p = feature_accuracy(n, params, c.symbol, mode);
    if (p.mode == EvalMode::MonteCarlo) used = EvalMode::MonteCarlo;
    correct *= p.value;
  }
  return {1.0 - correct, used};
}

inline double phi_measure(std::size_t n, double perr, const MeasurementEconomy& econ) {
  if (!(perr >= 0.0 && perr <= 1.0)) throw Error(Errc::InvalidArgument, "Perr must lie in [0, 1]");
  return econ.value * (1.0 - perr) - econ.cost * static_cast<double>(n);
}

struct SweepPoint {
  std::size_t n = 0;
  double perr = 0.0;
  double phi = 0.0;
  EvalMode mode = EvalMode::Exact;
};

struct OptimalCount {
  std::size_t n = 1;
  double phi = 0.0;
  std::vector<SweepPoint> sweep;  // n = 1 .. n_max
};

/// Index of the largest phi; first (smallest n) on ties.
inline std::size_t argmax_phi(std::span<const SweepPoint> sweep) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < sweep.size(); ++i)
    if (sweep[i].phi > sweep[best].phi) best = i;
  return best;
}

inline OptimalCount optimal_n(const KnowledgeBase& kb, ObjectId node, const ChannelParams& params,
                              const MeasurementEconomy& econ, EvalMode mode = EvalMode::Auto) {
  econ.validate();
  OptimalCount result;
  result.sweep.reserve(econ.n_max);
  for (std::size_t n = 1; n <= econ.n_max; ++n) {
    const RecognitionError e = recognition_error(kb, node, n, params, mode);
    result.sweep.push_back({n, e.perr, phi_measure(n, e.perr, econ), e.mode});
  }
  const std::size_t best = argmax_phi(result.sweep);
  result.n = result.sweep[best].n;
  result.phi = result.sweep[best].phi;
  return result;
}

/// Measurement count an agent fixes from congenital knowledge alone:
/// maximizes V(1 - mean Perr) - c n, the mean taken over the leaves that
/// constrain every feature. 1 when the tree has no such leaf.
inline std::size_t a_priori_measurement_count(const KnowledgeBase& kb, const ChannelParams& params,
                                              const MeasurementEconomy& econ, EvalMode mode = EvalMode::Auto) {
  econ.validate();
  std::vector<ObjectId> leaves;
  for (const auto& o : kb.objects())
    if (kb.is_leaf(o.id) && o.predicate.size() == kb.dimension()) leaves.push_back(o.id);
  if (leaves.empty()) return 1;
  std::vector<SweepPoint> sweep;
  for (std::size_t n = 1; n <= econ.n_max; ++n) {
    double mean = 0.0;
    for (ObjectId leaf : leaves) mean += recognition_error(kb, leaf, n, params, mode).perr;
    mean /= static_cast<double>(leaves.size());
    sweep.push_back({n, mean, phi_measure(n, mean, econ), mode});
  }
  return sweep[argmax_phi(sweep)].n;
}

struct ProgramQuality {
  ProgramId program;
  double phi = 0.0;

  bool operator==(const ProgramQuality&) const = default;
};

inline ProgramQuality phi_program(const Program& program, double agreement, std::size_t n,
                                  const MeasurementEconomy& econ) {
  if (!(agreement >= 0.0 && agreement <= 1.0)) throw Error(Errc::InvalidArgument, "agreement must lie in [0, 1]");
  return {program.id, program.base_utility * agreement - econ.cost * static_cast<double>(n)};
}

/// Keeps programs with phi strictly above phi0, best first; equal phi by
/// ascending program id.
inline std::vector<ProgramQuality> order_and_filter(std::span<const ProgramQuality> qualities, double phi0) {
  std::vector<ProgramQuality> kept;
  std::copy_if(qualities.begin(), qualities.end(), std::back_inserter(kept),
               [&](const ProgramQuality& q) { return q.phi > phi0; });
  std::stable_sort(kept.begin(), kept.end(), [](const ProgramQuality& x, const ProgramQuality& y) {
    if (x.phi != y.phi) return x.phi > y.phi;
    return x.program < y.program;
  });
  return kept;
}

/// Uniform pick over the eligible list with one draw; nullopt when empty.
inline std::optional<ProgramId> select_random(std::span<const ProgramQuality> eligible, SplitMix64& rng) {
  if (eligible.empty()) return std::nullopt;
  return eligible[static_cast<std::size_t>(rng.below(eligible.size()))].program;
}

}  // namespace aprior
