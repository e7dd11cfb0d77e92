#pragma once

// Post-hoc checks over serialized episode logs. The auditor only reads the
// log and the sealed KB document; it never consults live agent state.
//
//   closure     digests and task enumerations identical before/after
//   statement1  no action on unrecognized trials, actions only on the
//               recognized node, no id outside the sealed KB
//   kb_match    the log was produced against this KB document
//   reflex      per program: never fires before the k-th recognition of its
//               trigger, gate opens exactly there, and fires there whenever
//               it is the sole candidate surviving the Phi0 filter

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "aprior/agent.hpp"
#include "aprior/error.hpp"
#include "aprior/kb.hpp"

namespace aprior {

struct CheckResult {
  std::string name;
  bool pass = true;
  bool at_header = false;              // failure located in the header
  std::optional<std::uint64_t> trial;  // first violating trial
  std::string detail;
};

struct AuditTotals {
  std::uint64_t trials = 0;
  std::uint64_t unrecognized = 0;
  std::uint64_t actions = 0;
};

struct AuditReport {
  std::vector<CheckResult> checks;
  std::uint64_t digest_initial = 0;
  std::uint64_t digest_final = 0;
  AuditTotals totals;

  bool all_pass() const {
    return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.pass; });
  }
  const CheckResult* first_failure() const {
    const auto it = std::find_if(checks.begin(), checks.end(), [](const CheckResult& c) { return !c.pass; });
    return it == checks.end() ? nullptr : &*it;
  }
};

namespace audit_detail {

inline void require_well_formed(const EpisodeLog& log) {
  if (log.trials.empty()) throw Error(Errc::MalformedLog, "episode has no trials");
  if (log.header.trials != log.trials.size()) throw Error(Errc::MalformedLog, "trial count disagrees with header");
  for (std::size_t i = 0; i < log.trials.size(); ++i)
    if (log.trials[i].t != i) throw Error(Errc::MalformedLog, "trial indices must run 0, 1, 2, ...");
}

inline CheckResult fail_at(std::string name, std::uint64_t t, std::string detail) {
  return {std::move(name), false, false, t, std::move(detail)};
}

inline CheckResult fail_header(std::string name, std::string detail) {
  return {std::move(name), false, true, std::nullopt, std::move(detail)};
}

}  // namespace audit_detail

/// First locality violation in a single trial, if any.
inline std::optional<std::string> statement1_violation(const TrialLog& t, const KnowledgeBase& kb) {
  const auto known_program = [&](ProgramId id) { return kb.find_program(id) != nullptr; };
  if (!kb.contains(t.outcome.node)) return "outcome references unknown object " + std::to_string(t.outcome.node.value);
  if (t.stimulus && !t.stimulus->truth.is_omega() && !kb.contains(*t.stimulus->truth.object))
    return "stimulus truth references unknown object";
  for (ProgramId id : t.eligible)
    if (!known_program(id)) return "eligible list references unknown program " + std::to_string(id.value);
  for (const auto& q : t.qualities)
    if (!known_program(q.program)) return "quality references unknown program " + std::to_string(q.program.value);
  for (const auto& q : t.ordered)
    if (!known_program(q.program)) return "ordered list references unknown program " + std::to_string(q.program.value);
  if (t.chosen && !known_program(*t.chosen)) return "chosen program unknown";

  if (!t.action) return std::nullopt;
  const ActionEvent& a = *t.action;
  if (t.outcome.status == RecognitionStatus::Unrecognized) return "effector started on an unrecognized pattern";
  if (a.trigger != t.outcome.node) return "action trigger differs from the recognized node";
  const Program* program = kb.find_program(a.program);
  if (program == nullptr) return "action references unknown program " + std::to_string(a.program.value);
  if (program->trigger != t.outcome.node)
    return "program " + std::to_string(a.program.value) + " is not defined on object " +
           std::to_string(t.outcome.node.value);
  if (a.operations != program->operations) return "action operations differ from the program's";
  if (a.tags.size() != a.operations.size() || a.tasks.size() != a.operations.size())
    return "action tags/tasks do not line up with operations";
  for (std::size_t i = 0; i < a.operations.size(); ++i) {
    const OperationDef* op = kb.find_operation(a.operations[i]);
    if (op == nullptr) return "action references unknown operation";
    if (op->action_tag != a.tags[i]) return "action tag \"" + a.tags[i] + "\" not defined by its operation";
    if (kb.find_task(a.tasks[i]) == nullptr) return "action references task " + std::to_string(a.tasks[i].value) + " outside the KB";
    if (op->task != a.tasks[i]) return "action task differs from the operation's task";
  }
  return std::nullopt;
}

inline CheckResult assert_closure(const EpisodeLog& log) {
  audit_detail::require_well_formed(log);
  const auto& h = log.header;
  if (h.kb_digest_initial != h.kb_digest_final)
    return audit_detail::fail_header("closure", "kb digest changed: " + digest_hex(h.kb_digest_initial) + " -> " +
                                                    digest_hex(h.kb_digest_final));
  if (h.tasks_initial != h.tasks_final) return audit_detail::fail_header("closure", "task enumeration changed");
  return {"closure", true, false, std::nullopt, {}};
}

inline CheckResult assert_statement1(const EpisodeLog& log, const KnowledgeBase& kb) {
  audit_detail::require_well_formed(log);
  for (const auto& tid : log.header.tasks_final)
    if (kb.find_task(tid.id) == nullptr)
      return audit_detail::fail_header("statement1", "task " + std::to_string(tid.id.value) + " outside the KB");
  for (const auto& t : log.trials)
    if (auto violation = statement1_violation(t, kb)) return audit_detail::fail_at("statement1", t.t, *violation);
  return {"statement1", true, false, std::nullopt, {}};
}

inline CheckResult assert_kb_match(const EpisodeLog& log, const KnowledgeBase& kb) {
  audit_detail::require_well_formed(log);
  if (log.header.kb_digest_initial != kb_digest(kb))
    return audit_detail::fail_header("kb_match", "log digest " + digest_hex(log.header.kb_digest_initial) +
                                                     " differs from KB digest " + digest_hex(kb_digest(kb)));
  if (log.header.tasks_initial != enumerate_tasks(kb))
    return audit_detail::fail_header("kb_match", "log task list differs from the KB");
  return {"kb_match", true, false, std::nullopt, {}};
}

inline CheckResult assert_reflex(const EpisodeLog& log, const KnowledgeBase& kb, ProgramId id) {
  audit_detail::require_well_formed(log);
  const Program* program = kb.find_program(id);
  if (program == nullptr) throw Error(Errc::UnknownProgram, "program " + std::to_string(id.value));
  const std::string name = "reflex[" + std::to_string(id.value) + "]";
  const auto listed = [&](const auto& list, auto project) {
    return std::any_of(list.begin(), list.end(), [&](const auto& x) { return project(x) == id; });
  };
  std::uint64_t recognitions = 0;
  for (const auto& t : log.trials) {
    const bool on_trigger = t.outcome.status != RecognitionStatus::Unrecognized && t.outcome.node == program->trigger;
    if (on_trigger) ++recognitions;
    const bool gate_open = on_trigger && recognitions >= program->reflex_threshold;
    const bool fired = t.action && t.action->program == id;
    if (fired && !gate_open)
      return audit_detail::fail_at(name, t.t,
                                   "fired at recognition " + std::to_string(recognitions) + " of trigger, threshold " +
                                       std::to_string(program->reflex_threshold));
    const bool in_eligible = listed(t.eligible, [](ProgramId p) { return p; });
    if (in_eligible != gate_open)
      return audit_detail::fail_at(name, t.t, gate_open ? "gate did not open at threshold" : "listed eligible before threshold");
    if (on_trigger && recognitions == program->reflex_threshold && t.ordered.size() == 1 &&
        t.ordered.front().program == id && !fired)
      return audit_detail::fail_at(name, t.t, "sole surviving candidate did not fire at its threshold");
  }
  return {name, true, false, std::nullopt, {}};
}

/// All checks: closure, statement1, kb_match, then reflex for each program.
inline AuditReport audit_episode(const EpisodeLog& log, const KnowledgeBase& kb) {
  AuditReport report;
  report.checks.push_back(assert_closure(log));
  report.checks.push_back(assert_statement1(log, kb));
  report.checks.push_back(assert_kb_match(log, kb));
  for (const Program& p : kb.programs()) report.checks.push_back(assert_reflex(log, kb, p.id));
  report.digest_initial = log.header.kb_digest_initial;
  report.digest_final = log.header.kb_digest_final;
  report.totals.trials = log.trials.size();
  for (const auto& t : log.trials) {
    if (t.outcome.status == RecognitionStatus::Unrecognized) ++report.totals.unrecognized;
    if (t.action) ++report.totals.actions;
  }
  return report;
}

inline nlohmann::json to_json(const AuditReport& report) {
  using nlohmann::json;
  json checks = json::array();
  for (const auto& c : report.checks) {
    json location = nullptr;
    if (c.at_header) location = "header";
    else if (c.trial) location = *c.trial;
    checks.push_back({{"name", c.name}, {"pass", c.pass}, {"location", location}, {"detail", c.detail}});
  }
  return {{"pass", report.all_pass()},
          {"checks", std::move(checks)},
          {"kb_digest_initial", digest_hex(report.digest_initial)},
          {"kb_digest_final", digest_hex(report.digest_final)},
          {"totals",
           {{"trials", report.totals.trials},
            {"unrecognized", report.totals.unrecognized},
            {"actions", report.totals.actions}}}};
}

inline std::string summary_line(const AuditReport& report) {
  const auto passed = std::count_if(report.checks.begin(), report.checks.end(), [](const CheckResult& c) { return c.pass; });
  std::string line = report.all_pass() ? "PASS" : "FAIL";
  line += " " + std::to_string(passed) + "/" + std::to_string(report.checks.size()) + " checks";
  if (const CheckResult* f = report.first_failure()) {
    line += "; " + f->name + " violated at ";
    line += f->at_header ? std::string("header") : "trial " + std::to_string(*f->trial);
    line += ": " + f->detail;
  }
  line += " (trials=" + std::to_string(report.totals.trials) +
          " unrecognized=" + std::to_string(report.totals.unrecognized) +
          " actions=" + std::to_string(report.totals.actions) + ")";
  return line;
}

}  // namespace aprior
