#pragma once

// Receptor pipeline: a noisy symbol channel, n-fold repeated observation with
// per-feature majority denoising, and greedy descent of the recognition tree.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "aprior/error.hpp"
#include "aprior/kb.hpp"
#include "aprior/rng.hpp"

namespace aprior {

struct ChannelParams {
  double epsilon = 0.0;  // per-feature corruption probability
  Symbol alphabet = 2;
  std::size_t dimension = 1;

  void validate() const {
    if (!(epsilon >= 0.0 && epsilon <= 1.0))
      throw Error(Errc::InvalidArgument, "epsilon must lie in [0, 1]");
    if (alphabet < 2) throw Error(Errc::InvalidArgument, "alphabet must be >= 2");
    if (dimension < 1) throw Error(Errc::InvalidArgument, "dimension must be >= 1");
  }
};

inline ChannelParams channel_for(const KnowledgeBase& kb, double epsilon) {
  ChannelParams params{epsilon, kb.alphabet(), kb.dimension()};
  params.validate();
  return params;
}

enum class RecognitionStatus { Unrecognized, Partial, Full };

constexpr std::string_view to_string(RecognitionStatus status) noexcept {
  switch (status) {
    case RecognitionStatus::Unrecognized: return "unrecognized";
    case RecognitionStatus::Partial: return "partial";
    case RecognitionStatus::Full: return "full";
  }
  return "unrecognized";
}

inline RecognitionStatus parse_status(std::string_view text) {
  if (text == "unrecognized") return RecognitionStatus::Unrecognized;
  if (text == "partial") return RecognitionStatus::Partial;
  if (text == "full") return RecognitionStatus::Full;
  throw Error(Errc::SchemaError, "unknown recognition status \"" + std::string(text) + "\"");
}

struct RecognitionOutcome {
  ObjectId node = kRootId;
  std::size_t depth = 0;
  RecognitionStatus status = RecognitionStatus::Unrecognized;

  bool operator==(const RecognitionOutcome&) const = default;
};

struct MeasurementResult {
  FeatureVector denoised;
  RecognitionOutcome outcome;
  double agreement = 0.0;  // fraction of raw observations identifying to outcome.node
  std::size_t n = 0;
};

inline bool match_predicate(const Predicate& predicate, const FeatureVector& v) {
  return std::all_of(predicate.constraints.begin(), predicate.constraints.end(),
                     [&](const Constraint& c) { return c.feature < v.size() && v[c.feature] == c.symbol; });
}

inline void require_well_formed(const KnowledgeBase& kb, const FeatureVector& v) {
  if (!well_formed(v, kb.dimension(), kb.alphabet()))
    throw Error(Errc::SchemaError, "feature vector does not fit d=" + std::to_string(kb.dimension()) +
                                       ", alphabet=" + std::to_string(kb.alphabet()));
}

/// Greedy descent from the virtual root into the unique matching child.
/// Sibling exclusivity guarantees at most one child matches.
inline RecognitionOutcome identify(const KnowledgeBase& kb, const FeatureVector& v) {
  ObjectId node = kRootId;
  std::size_t depth = 0;
  for (;;) {
    const auto children = kb.children(node);
    const auto next = std::find_if(children.begin(), children.end(),
                                   [&](ObjectId child) { return match_predicate(kb.predicate(child), v); });
    if (next == children.end()) break;
    node = *next;
    ++depth;
  }
  RecognitionStatus status = RecognitionStatus::Unrecognized;
  if (node != kRootId) status = kb.is_leaf(node) ? RecognitionStatus::Full : RecognitionStatus::Partial;
  return {node, depth, status};
}

/// Each feature is kept with probability 1-eps, otherwise replaced by one of
/// the a-1 other symbols uniformly.
inline FeatureVector corrupt(const FeatureVector& v, const ChannelParams& params, SplitMix64& rng) {
  FeatureVector out = v;
  for (Symbol& s : out.symbols) {
    if (rng.bernoulli(params.epsilon)) {
      const auto r = static_cast<Symbol>(rng.below(params.alphabet - 1));
      s = r < s ? r : r + 1;
    }
  }
  return out;
}

/// Per-feature modal symbol; ties go to the lowest symbol.
inline FeatureVector majority_fold(std::span<const FeatureVector> observations) {
  if (observations.empty()) throw Error(Errc::InvalidCount, "majority_fold needs at least one observation");
  const std::size_t d = observations.front().size();
  Symbol top = 0;
  for (const auto& obs : observations) {
    if (obs.size() != d) throw Error(Errc::SchemaError, "observations differ in length");
    for (Symbol s : obs.symbols) top = std::max(top, s);
  }
  FeatureVector out;
  out.symbols.resize(d);
  std::vector<std::size_t> counts(static_cast<std::size_t>(top) + 1);
  for (std::size_t i = 0; i < d; ++i) {
    std::fill(counts.begin(), counts.end(), 0);
    for (const auto& obs : observations) ++counts[obs[i]];
    // max_element returns the first maximum, i.e. the lowest symbol on ties.
    out.symbols[i] = static_cast<Symbol>(std::max_element(counts.begin(), counts.end()) - counts.begin());
  }
  return out;
}

/// n corrupted copies of x, majority-folded, then identified. Consumes n*d
/// corruption draws from rng.
inline MeasurementResult measure(const KnowledgeBase& kb, const FeatureVector& x, std::size_t n,
                                 const ChannelParams& params, SplitMix64& rng) {
  if (n == 0) throw Error(Errc::InvalidCount, "measurement count must be >= 1");
  params.validate();
  require_well_formed(kb, x);
  std::vector<FeatureVector> observations;
  observations.reserve(n);
  for (std::size_t i = 0; i < n; ++i) observations.push_back(corrupt(x, params, rng));

  MeasurementResult result;
  result.n = n;
  result.denoised = majority_fold(observations);
  result.outcome = identify(kb, result.denoised);
  const auto agreeing = std::count_if(observations.begin(), observations.end(), [&](const FeatureVector& obs) {
    return identify(kb, obs).node == result.outcome.node;
  });
  result.agreement = static_cast<double>(agreeing) / static_cast<double>(n);
  return result;
}

}  // namespace aprior
