#pragma once

// JSON-lines form of an EpisodeLog.
//
// Line 1 is the header:
//   {"type":"header","format":"aprior-episode/1","seed":..,"trials":..,
//    "scenario":..,"config":{"epsilon","value","cost","phi0","n_max","fixed_n","mode"},
//    "n":..,"kb_digest_initial":"<16 hex>","kb_digest_final":"<16 hex>",
//    "tasks_initial":[{"id","pairs"}..],"tasks_final":[..]}
// followed by one line per trial:
//   {"type":"trial","t","stimulus":{"vector","truth"},"n","denoised",
//    "outcome":{"node","depth","status"},"agreement","recurrence","eligible",
//    "qualities":[{"program","phi"}],"ordered":[..],"chosen","phi",
//    "action":{"program","trigger","operations","tags","tasks"}|null,"score"}
// Keys are emitted in sorted order with no whitespace.

#include <charconv>
#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <system_error>

#include <nlohmann/json.hpp>

#include "aprior/agent.hpp"
#include "aprior/error.hpp"

namespace aprior {

inline constexpr std::string_view kEpisodeFormat = "aprior-episode/1";

namespace log_detail {

using nlohmann::json;

[[noreturn]] inline void malformed(const std::string& what) { throw Error(Errc::MalformedLog, what); }

inline const json& field(const json& obj, const char* key, const std::string& where) {
  if (!obj.is_object()) malformed(where + ": expected an object");
  const auto it = obj.find(key);
  if (it == obj.end()) malformed(where + ": missing \"" + key + "\"");
  return *it;
}

template <class T>
T get(const json& obj, const char* key, const std::string& where) {
  try {
    return field(obj, key, where).get<T>();
  } catch (const json::exception& e) {
    malformed(where + "." + key + ": " + e.what());
  }
}

inline std::uint64_t parse_digest(const json& value, const std::string& where) {
  if (!value.is_string()) malformed(where + ": digest must be a hex string");
  const std::string text = value.get<std::string>();
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out, 16);
  if (ec != std::errc{} || ptr != text.data() + text.size() || text.size() != 16)
    malformed(where + ": digest must be 16 hex digits");
  return out;
}

inline json tasks_json(const std::vector<Task>& tasks) {
  json out = json::array();
  for (const auto& t : tasks) out.push_back(to_json(t));
  return out;
}

inline std::vector<Task> tasks_from_json(const json& value, const std::string& where) {
  if (!value.is_array()) malformed(where + ": expected an array");
  std::vector<Task> tasks;
  for (const auto& t : value) {
    Task task{TaskId{get<std::int64_t>(t, "id", where)}, {}};
    const json& pairs = field(t, "pairs", where);
    if (!pairs.is_array()) malformed(where + ": pairs must be an array");
    for (const auto& p : pairs) {
      if (!p.is_array() || p.size() != 2 || !p[0].is_number_integer() || !p[1].is_number_integer())
        malformed(where + ": pair must be [object, operation]");
      task.pairs.push_back({ObjectId{p[0].get<std::int64_t>()}, OperationId{p[1].get<std::int64_t>()}});
    }
    tasks.push_back(std::move(task));
  }
  return tasks;
}

template <class Id>
json ids_json(const std::vector<Id>& ids) {
  json out = json::array();
  for (const Id& id : ids) out.push_back(id.value);
  return out;
}

template <class Id>
std::vector<Id> ids_from_json(const json& value, const std::string& where) {
  if (!value.is_array()) malformed(where + ": expected an array");
  std::vector<Id> ids;
  for (const auto& v : value) {
    if (!v.is_number_integer()) malformed(where + ": ids must be integers");
    ids.push_back(Id{v.get<std::int64_t>()});
  }
  return ids;
}

inline json qualities_json(const std::vector<ProgramQuality>& qs) {
  json out = json::array();
  for (const auto& q : qs) out.push_back({{"program", q.program.value}, {"phi", q.phi}});
  return out;
}

inline std::vector<ProgramQuality> qualities_from_json(const json& value, const std::string& where) {
  if (!value.is_array()) malformed(where + ": expected an array");
  std::vector<ProgramQuality> out;
  for (const auto& q : value)
    out.push_back({ProgramId{get<std::int64_t>(q, "program", where)}, get<double>(q, "phi", where)});
  return out;
}

inline FeatureVector vector_from_json(const json& value, const std::string& where) {
  if (!value.is_array()) malformed(where + ": expected an array");
  FeatureVector v;
  for (const auto& s : value) {
    if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<std::int64_t>() >= 0))
      malformed(where + ": symbols must be non-negative integers");
    v.symbols.push_back(s.get<Symbol>());
  }
  return v;
}

}  // namespace log_detail

inline nlohmann::json header_json(const EpisodeHeader& h) {
  using nlohmann::json;
  const AgentConfig& c = h.config;
  json config = {{"epsilon", c.epsilon},
                 {"value", c.econ.value},
                 {"cost", c.econ.cost},
                 {"phi0", c.econ.phi0},
                 {"n_max", c.econ.n_max},
                 {"fixed_n", c.fixed_n ? json(*c.fixed_n) : json(nullptr)},
                 {"mode", std::string(to_string(c.mode))}};
  return {{"type", "header"},
          {"format", std::string(kEpisodeFormat)},
          {"seed", h.seed},
          {"trials", h.trials},
          {"scenario", h.scenario},
          {"config", std::move(config)},
          {"n", h.n},
          {"kb_digest_initial", digest_hex(h.kb_digest_initial)},
          {"kb_digest_final", digest_hex(h.kb_digest_final)},
          {"tasks_initial", log_detail::tasks_json(h.tasks_initial)},
          {"tasks_final", log_detail::tasks_json(h.tasks_final)}};
}

inline nlohmann::json trial_json(const TrialLog& t) {
  using nlohmann::json;
  using namespace log_detail;
  json stimulus = nullptr;
  if (t.stimulus) stimulus = {{"vector", t.stimulus->vector.symbols}, {"truth", to_json(t.stimulus->truth)}};
  json action = nullptr;
  if (t.action)
    action = {{"program", t.action->program.value},
              {"trigger", t.action->trigger.value},
              {"operations", ids_json(t.action->operations)},
              {"tags", t.action->tags},
              {"tasks", ids_json(t.action->tasks)}};
  return {{"type", "trial"},
          {"t", t.t},
          {"stimulus", std::move(stimulus)},
          {"n", t.n},
          {"denoised", t.denoised.symbols},
          {"outcome",
           {{"node", t.outcome.node.value}, {"depth", t.outcome.depth}, {"status", std::string(to_string(t.outcome.status))}}},
          {"agreement", t.agreement},
          {"recurrence", t.recurrence},
          {"eligible", ids_json(t.eligible)},
          {"qualities", qualities_json(t.qualities)},
          {"ordered", qualities_json(t.ordered)},
          {"chosen", t.chosen ? json(t.chosen->value) : json(nullptr)},
          {"phi", t.phi ? json(*t.phi) : json(nullptr)},
          {"action", std::move(action)},
          {"score", t.score}};
}

inline void write_episode_log(const EpisodeLog& log, std::ostream& out) {
  out << header_json(log.header).dump() << '\n';
  for (const auto& t : log.trials) out << trial_json(t).dump() << '\n';
}

inline EpisodeHeader header_from_json(const nlohmann::json& j) {
  using namespace log_detail;
  const std::string where = "header";
  if (get<std::string>(j, "type", where) != "header") malformed("first line is not a header");
  if (get<std::string>(j, "format", where) != kEpisodeFormat) malformed("unsupported log format");
  EpisodeHeader h;
  h.seed = get<std::uint64_t>(j, "seed", where);
  h.trials = get<std::uint64_t>(j, "trials", where);
  h.scenario = get<std::string>(j, "scenario", where);
  const auto& c = field(j, "config", where);
  h.config.epsilon = get<double>(c, "epsilon", "config");
  h.config.econ.value = get<double>(c, "value", "config");
  h.config.econ.cost = get<double>(c, "cost", "config");
  h.config.econ.phi0 = get<double>(c, "phi0", "config");
  h.config.econ.n_max = get<std::size_t>(c, "n_max", "config");
  if (const auto& fixed = field(c, "fixed_n", "config"); !fixed.is_null())
    h.config.fixed_n = get<std::size_t>(c, "fixed_n", "config");
  try {
    h.config.mode = parse_mode(get<std::string>(c, "mode", "config"));
  } catch (const Error& e) {
    malformed(e.what());
  }
  h.n = get<std::size_t>(j, "n", where);
  h.kb_digest_initial = parse_digest(field(j, "kb_digest_initial", where), "kb_digest_initial");
  h.kb_digest_final = parse_digest(field(j, "kb_digest_final", where), "kb_digest_final");
  h.tasks_initial = tasks_from_json(field(j, "tasks_initial", where), "tasks_initial");
  h.tasks_final = tasks_from_json(field(j, "tasks_final", where), "tasks_final");
  return h;
}

inline TrialLog trial_from_json(const nlohmann::json& j, const std::string& where) {
  using namespace log_detail;
  if (get<std::string>(j, "type", where) != "trial") malformed(where + ": not a trial line");
  TrialLog t;
  t.t = get<std::uint64_t>(j, "t", where);
  if (const auto& s = field(j, "stimulus", where); !s.is_null()) {
    Stimulus stimulus;
    stimulus.vector = vector_from_json(field(s, "vector", where), where + ".stimulus");
    try {
      stimulus.truth = truth_from_json(field(s, "truth", where), where + ".stimulus");
    } catch (const Error& e) {
      malformed(e.what());
    }
    t.stimulus = std::move(stimulus);
  }
  t.n = get<std::size_t>(j, "n", where);
  t.denoised = vector_from_json(field(j, "denoised", where), where + ".denoised");
  const auto& o = field(j, "outcome", where);
  t.outcome.node = ObjectId{get<std::int64_t>(o, "node", where)};
  t.outcome.depth = get<std::size_t>(o, "depth", where);
  try {
    t.outcome.status = parse_status(get<std::string>(o, "status", where));
  } catch (const Error& e) {
    malformed(e.what());
  }
  t.agreement = get<double>(j, "agreement", where);
  t.recurrence = get<std::uint64_t>(j, "recurrence", where);
  t.eligible = ids_from_json<ProgramId>(field(j, "eligible", where), where + ".eligible");
  t.qualities = qualities_from_json(field(j, "qualities", where), where + ".qualities");
  t.ordered = qualities_from_json(field(j, "ordered", where), where + ".ordered");
  if (const auto& c = field(j, "chosen", where); !c.is_null()) t.chosen = ProgramId{get<std::int64_t>(j, "chosen", where)};
  if (const auto& p = field(j, "phi", where); !p.is_null()) t.phi = get<double>(j, "phi", where);
  if (const auto& a = field(j, "action", where); !a.is_null()) {
    ActionEvent e;
    e.t = t.t;
    e.program = ProgramId{get<std::int64_t>(a, "program", where)};
    e.trigger = ObjectId{get<std::int64_t>(a, "trigger", where)};
    e.operations = ids_from_json<OperationId>(field(a, "operations", where), where + ".operations");
    e.tags = get<std::vector<std::string>>(a, "tags", where);
    e.tasks = ids_from_json<TaskId>(field(a, "tasks", where), where + ".tasks");
    t.action = std::move(e);
  }
  t.score = get<double>(j, "score", where);
  return t;
}

/// Parses a JSON-lines episode log. Any structural problem, including a
/// trial count that disagrees with the header (truncation), is MalformedLog.
inline EpisodeLog read_episode_log(std::istream& in) {
  EpisodeLog log;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      log_detail::malformed("line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!have_header) {
      log.header = header_from_json(j);
      have_header = true;
    } else {
      log.trials.push_back(trial_from_json(j, "line " + std::to_string(line_no)));
    }
  }
  if (!have_header) log_detail::malformed("log is empty");
  if (log.header.trials == 0) log_detail::malformed("episode declares zero trials");
  if (log.trials.size() != log.header.trials)
    log_detail::malformed("header declares " + std::to_string(log.header.trials) + " trials, found " +
                          std::to_string(log.trials.size()));
  for (std::size_t i = 0; i < log.trials.size(); ++i)
    if (log.trials[i].t != i) log_detail::malformed("trial indices must run 0, 1, 2, ...");
  return log;
}

}  // namespace aprior
