#pragma once

// Environment scenarios: stimulus schedules over known patterns and unknown
// patterns (omega), plus the external scoring table for realized actions.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "aprior/error.hpp"
#include "aprior/kb.hpp"
#include "aprior/perception.hpp"
#include "aprior/rng.hpp"

namespace aprior {

/// Ground truth of a stimulus: a declared object, or omega (nullopt).
struct Truth {
  std::optional<ObjectId> object;

  static Truth omega() { return {}; }
  bool is_omega() const noexcept { return !object.has_value(); }
  auto operator<=>(const Truth&) const = default;
};

inline nlohmann::json to_json(const Truth& truth) {
  return truth.is_omega() ? nlohmann::json("omega") : nlohmann::json(truth.object->value);
}

inline Truth truth_from_json(const nlohmann::json& value, const std::string& where) {
  if (value.is_string() && value.get<std::string>() == "omega") return Truth::omega();
  if (value.is_number_integer()) return Truth{ObjectId{value.get<std::int64_t>()}};
  throw Error(Errc::SchemaError, where + ": truth must be an object id or \"omega\"");
}

struct Stimulus {
  FeatureVector vector;
  Truth truth;

  bool operator==(const Stimulus&) const = default;
};

enum class ScheduleKind { Fixed, Categorical, Reflex };

constexpr std::string_view to_string(ScheduleKind kind) noexcept {
  switch (kind) {
    case ScheduleKind::Fixed: return "fixed";
    case ScheduleKind::Categorical: return "categorical";
    case ScheduleKind::Reflex: return "reflex";
  }
  return "fixed";
}

struct Scenario {
  std::string name;
  ScheduleKind kind = ScheduleKind::Fixed;
  std::vector<Stimulus> entries;
  std::vector<double> weights;  // categorical only
  std::uint64_t repeat = 1;     // reflex only
  std::map<std::pair<std::string, Truth>, double> scoring;
};

/// Truth invariant: a known stimulus satisfies its object's predicate; an
/// omega stimulus matches no leaf of the tree.
inline bool truth_consistent(const KnowledgeBase& kb, const Stimulus& s) {
  if (!s.truth.is_omega()) {
    const InternalObject* object = kb.find_object(*s.truth.object);
    return object != nullptr && match_predicate(object->predicate, s.vector);
  }
  for (const auto& o : kb.objects())
    if (kb.is_leaf(o.id) && match_predicate(o.predicate, s.vector)) return false;
  return true;
}

inline Scenario load_scenario(const nlohmann::json& doc, const KnowledgeBase& kb) {
  using detail::as_array;
  using detail::as_int;
  using detail::at;
  using detail::fail;
  using detail::require;

  Scenario sc;
  if (!doc.is_object()) fail(Errc::SchemaError, "", "scenario document must be a JSON object");
  const auto& name = require(doc, "name", "");
  if (!name.is_string()) fail(Errc::SchemaError, "name", "expected a string");
  sc.name = name.get<std::string>();

  const auto& kind = require(doc, "kind", "");
  const std::string kind_text = kind.is_string() ? kind.get<std::string>() : "";
  if (kind_text == "fixed") sc.kind = ScheduleKind::Fixed;
  else if (kind_text == "categorical") sc.kind = ScheduleKind::Categorical;
  else if (kind_text == "reflex") sc.kind = ScheduleKind::Reflex;
  else fail(Errc::SchemaError, "kind", "expected \"fixed\", \"categorical\" or \"reflex\"");

  const auto& entries = as_array(require(doc, "entries", ""), "entries");
  if (entries.empty()) fail(Errc::SchemaError, "entries", "must not be empty");
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const std::string where = at("entries", i);
    Stimulus s;
    const auto& vec = as_array(require(entries[i], "vector", where), where + ".vector");
    for (std::size_t j = 0; j < vec.size(); ++j) {
      const std::int64_t sym = as_int(vec[j], at(where + ".vector", j));
      if (sym < 0) fail(Errc::SchemaError, where + ".vector", "symbols must be non-negative");
      s.vector.symbols.push_back(static_cast<Symbol>(sym));
    }
    if (!well_formed(s.vector, kb.dimension(), kb.alphabet()))
      fail(Errc::SchemaError, where + ".vector", "does not fit the knowledge base dimension/alphabet");
    s.truth = truth_from_json(require(entries[i], "truth", where), where + ".truth");
    if (!truth_consistent(kb, s))
      fail(Errc::TruthMismatch, where,
           s.truth.is_omega() ? "omega vector matches a leaf of the recognition tree"
                              : "vector does not satisfy object " + std::to_string(s.truth.object->value));
    sc.entries.push_back(std::move(s));
  }

  if (sc.kind == ScheduleKind::Categorical) {
    const auto& weights = as_array(require(doc, "weights", ""), "weights");
    if (weights.size() != sc.entries.size()) fail(Errc::SchemaError, "weights", "one weight per entry required");
    for (std::size_t i = 0; i < weights.size(); ++i) {
      const double w = detail::as_number(weights[i], at("weights", i));
      if (!(w > 0.0) || !std::isfinite(w)) fail(Errc::SchemaError, at("weights", i), "must be positive and finite");
      sc.weights.push_back(w);
    }
  }
  if (sc.kind == ScheduleKind::Reflex) {
    const std::int64_t r = as_int(require(doc, "repeat", ""), "repeat");
    if (r < 1) fail(Errc::SchemaError, "repeat", "must be >= 1");
    sc.repeat = static_cast<std::uint64_t>(r);
  }

  if (const auto it = doc.find("scoring"); it != doc.end()) {
    const auto& rows = as_array(*it, "scoring");
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const std::string where = at("scoring", i);
      const auto& tag = require(rows[i], "action_tag", where);
      if (!tag.is_string()) fail(Errc::SchemaError, where + ".action_tag", "expected a string");
      const Truth truth = truth_from_json(require(rows[i], "truth", where), where + ".truth");
      const double value = detail::as_number(require(rows[i], "value", where), where + ".value");
      if (!sc.scoring.emplace(std::pair{tag.get<std::string>(), truth}, value).second)
        fail(Errc::DuplicateId, where, "scoring pair listed twice");
    }
  }
  return sc;
}

inline Scenario load_scenario(const std::filesystem::path& path, const KnowledgeBase& kb) {
  const std::string text = read_text_file(path);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(Errc::SchemaError, e.what());
  }
  return load_scenario(doc, kb);
}

/// Fixed lists cycle; categorical draws one weighted sample (one rng draw);
/// reflex schedules repeat each entry `repeat` times before moving on.
inline const Stimulus& next_stimulus(const Scenario& sc, std::uint64_t t, SplitMix64& rng) {
  switch (sc.kind) {
    case ScheduleKind::Fixed:
      return sc.entries[t % sc.entries.size()];
    case ScheduleKind::Reflex:
      return sc.entries[(t / sc.repeat) % sc.entries.size()];
    case ScheduleKind::Categorical: {
      double total = 0.0;
      for (double w : sc.weights) total += w;
      double u = rng.uniform01() * total;
      for (std::size_t i = 0; i < sc.entries.size(); ++i) {
        if (u < sc.weights[i]) return sc.entries[i];
        u -= sc.weights[i];
      }
      return sc.entries.back();
    }
  }
  return sc.entries.front();
}

/// Realized score of an action against the ground truth; 0 when no action
/// fired or the pair is not in the table.
inline double score(const Scenario& sc, const std::optional<std::string>& action_tag, const Truth& truth) {
  if (!action_tag) return 0.0;
  const auto it = sc.scoring.find({*action_tag, truth});
  return it == sc.scoring.end() ? 0.0 : it->second;
}

}  // namespace aprior
