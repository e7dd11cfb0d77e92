#pragma once

// Batch commands behind the `aprior` executable. Each returns the process
// exit code: 0 ok, 1 a check failed, 2 operational error.

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>

#include "aprior/agent.hpp"
#include "aprior/audit.hpp"
#include "aprior/decision.hpp"
#include "aprior/episode_log.hpp"
#include "aprior/kb.hpp"
#include "aprior/world.hpp"

namespace aprior::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitCheckFailed = 1;
inline constexpr int kExitError = 2;

/// Shortest decimal that round-trips to the same double.
inline std::string format_double(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return ec == std::errc{} ? std::string(buf, ptr) : std::string("nan");
}

enum class OutputFormat { Jsonl, Csv };

struct RunConfig {
  std::filesystem::path kb_path;
  std::filesystem::path scenario_path;
  std::uint64_t seed = 0;
  std::uint64_t trials = 1;
  MeasurementEconomy econ;
  double epsilon = 0.0;
  std::optional<std::size_t> fixed_n;
  std::filesystem::path output_path;
  OutputFormat format = OutputFormat::Jsonl;
  EvalMode mode = EvalMode::Exact;
  bool strict = false;
};

struct SweepConfig {
  std::filesystem::path kb_path;
  std::string node;  // object id or name
  double epsilon = 0.0;
  MeasurementEconomy econ;
  EvalMode mode = EvalMode::Exact;
  std::filesystem::path output_path;  // empty: write to out stream
};

inline int cmd_validate(const std::filesystem::path& kb_path, std::ostream& out, std::ostream& err) {
  std::string text;
  try {
    text = read_text_file(kb_path);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitError;
  }
  try {
    const KnowledgeBase kb = parse_kb(text);
    out << "ok " << kb.objects().size() << " objects, " << kb.operations().size() << " operations, "
        << kb.tasks().size() << " tasks, " << kb.programs().size() << " programs\n"
        << "digest " << digest_hex(kb_digest(kb)) << '\n';
    return kExitOk;
  } catch (const Error& e) {
    err << kb_path.string() << ": " << e.what() << '\n';
    return kExitCheckFailed;
  }
}

inline std::string episode_csv(const EpisodeLog& log) {
  std::ostringstream os;
  os << "t,truth,node,status,n,agreement,chosen,tags,score\n";
  for (const auto& t : log.trials) {
    os << t.t << ',';
    if (t.stimulus) os << (t.stimulus->truth.is_omega() ? std::string("omega") : std::to_string(t.stimulus->truth.object->value));
    os << ',' << t.outcome.node.value << ',' << to_string(t.outcome.status) << ',' << t.n << ','
       << format_double(t.agreement) << ',';
    if (t.chosen) os << t.chosen->value;
    os << ',';
    if (t.action)
      for (std::size_t i = 0; i < t.action->tags.size(); ++i) os << (i ? ";" : "") << t.action->tags[i];
    os << ',' << format_double(t.score) << '\n';
  }
  return os.str();
}

inline int cmd_run(const RunConfig& config, std::ostream& out, std::ostream& err) {
  try {
    if (config.trials == 0) throw Error(Errc::InvalidCount, "trials must be >= 1");
    const auto kb = std::make_shared<const KnowledgeBase>(load_kb(config.kb_path));
    const Scenario scenario = load_scenario(config.scenario_path, *kb);
    Agent agent(kb, AgentConfig{config.epsilon, config.econ, config.fixed_n, config.mode}, config.seed);

    const std::uint64_t digest = kb_digest(*kb);
    std::optional<std::string> strict_failure;
    TrialHook hook;
    if (config.strict) {
      hook = [&](const TrialLog& t) {
        if (strict_failure) return;
        if (auto v = statement1_violation(t, *kb)) strict_failure = "statement1 at trial " + std::to_string(t.t) + ": " + *v;
        else if (kb_digest(*kb) != digest) strict_failure = "closure at trial " + std::to_string(t.t);
      };
    }
    const EpisodeLog log = run_episode(agent, scenario, config.trials, hook);

    std::ofstream file(config.output_path, std::ios::binary | std::ios::trunc);
    if (!file) throw Error(Errc::IoError, "cannot write " + config.output_path.string());
    if (config.format == OutputFormat::Jsonl) write_episode_log(log, file);
    else file << episode_csv(log);
    file.close();
    if (!file) throw Error(Errc::IoError, "failed writing " + config.output_path.string());

    std::uint64_t recognized = 0, actions = 0;
    double total_score = 0.0;
    for (const auto& t : log.trials) {
      if (t.outcome.status != RecognitionStatus::Unrecognized) ++recognized;
      if (t.action) ++actions;
      total_score += t.score;
    }
    const double trials = static_cast<double>(log.trials.size());
    out << "trials=" << log.trials.size() << " n=" << log.header.n
        << " recognized=" << format_double(100.0 * static_cast<double>(recognized) / trials) << "%"
        << " actions=" << actions << " mean_score=" << format_double(total_score / trials) << '\n';
    if (strict_failure) {
      err << "strict audit failed: " << *strict_failure << '\n';
      return kExitCheckFailed;
    }
    return kExitOk;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitError;
  }
}

inline ObjectId resolve_node(const KnowledgeBase& kb, const std::string& node) {
  std::int64_t id = 0;
  const auto [ptr, ec] = std::from_chars(node.data(), node.data() + node.size(), id);
  if (ec == std::errc{} && ptr == node.data() + node.size()) return ObjectId{id};
  if (auto named = kb.object_by_name(node)) return *named;
  throw Error(Errc::UnknownObject, "no object named \"" + node + "\"");
}

/// CSV rows n,perr,phi,is_argmax for n = 1..n_max.
inline std::string sweep_csv(const OptimalCount& result) {
  std::string csv = "n,perr,phi,is_argmax\n";
  for (const auto& p : result.sweep)
    csv += std::to_string(p.n) + "," + format_double(p.perr) + "," + format_double(p.phi) + "," +
           (p.n == result.n ? "1" : "0") + "\n";
  return csv;
}

inline int cmd_sweep(const SweepConfig& config, std::ostream& out, std::ostream& err) {
  try {
    const KnowledgeBase kb = load_kb(config.kb_path);
    const ObjectId node = resolve_node(kb, config.node);
    const OptimalCount result = optimal_n(kb, node, channel_for(kb, config.epsilon), config.econ, config.mode);
    const std::string csv = sweep_csv(result);
    if (config.output_path.empty()) {
      out << csv;
    } else {
      std::ofstream file(config.output_path, std::ios::binary | std::ios::trunc);
      if (!(file << csv)) throw Error(Errc::IoError, "cannot write " + config.output_path.string());
    }
    bool any_mc = false;
    for (const auto& p : result.sweep) any_mc = any_mc || p.mode == EvalMode::MonteCarlo;
    err << "argmax n=" << result.n << " phi=" << format_double(result.phi)
        << " mode=" << (any_mc ? "mc" : "exact") << '\n';
    return kExitOk;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitError;
  }
}

/// Runs every audit check, writes <log>.audit.json beside the log and prints
/// a one-line summary.
inline int cmd_audit(const std::filesystem::path& log_path, const std::filesystem::path& kb_path,
                     std::ostream& out, std::ostream& err) {
  try {
    const KnowledgeBase kb = load_kb(kb_path);
    std::ifstream in(log_path, std::ios::binary);
    if (!in) throw Error(Errc::IoError, "cannot open " + log_path.string());
    const EpisodeLog log = read_episode_log(in);
    const AuditReport report = audit_episode(log, kb);

    std::filesystem::path report_path = log_path;
    report_path += ".audit.json";
    std::ofstream file(report_path, std::ios::binary | std::ios::trunc);
    if (!(file << to_json(report).dump(2) << '\n')) throw Error(Errc::IoError, "cannot write " + report_path.string());

    out << summary_line(report) << '\n';
    return report.all_pass() ? kExitOk : kExitCheckFailed;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitError;
  }
}

}  // namespace aprior::cli
