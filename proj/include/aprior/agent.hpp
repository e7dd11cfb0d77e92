#pragma once

// The behavior loop of a logically closed agent. One step:
//   Measure -> Memory -> reflex gate -> DoWhile (Phi > Phi0) -> Random -> Do
// Every intermediate is kept in the returned TrialLog.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "aprior/decision.hpp"
#include "aprior/error.hpp"
#include "aprior/kb.hpp"
#include "aprior/perception.hpp"
#include "aprior/rng.hpp"
#include "aprior/world.hpp"

namespace aprior {

struct MemoryEntry {
  std::uint64_t t = 0;
  RecognitionOutcome outcome;
  std::size_t n = 0;
  std::optional<ProgramId> program;
  std::optional<double> phi;
  std::vector<std::string> action_tags;  // empty when nothing fired
};

struct ActionEvent {
  std::uint64_t t = 0;
  ProgramId program;
  ObjectId trigger;
  std::vector<OperationId> operations;
  std::vector<std::string> tags;
  std::vector<TaskId> tasks;  // task served by each operation, same order

  bool operator==(const ActionEvent&) const = default;
};

struct AgentConfig {
  double epsilon = 0.0;
  MeasurementEconomy econ;
  std::optional<std::size_t> fixed_n;
  EvalMode mode = EvalMode::Exact;
};

struct TrialLog {
  std::uint64_t t = 0;
  std::optional<Stimulus> stimulus;  // filled by run_episode
  std::size_t n = 0;
  FeatureVector denoised;
  RecognitionOutcome outcome;
  double agreement = 0.0;
  std::uint64_t recurrence = 0;  // count for outcome.node after recording this trial
  std::vector<ProgramId> eligible;
  std::vector<ProgramQuality> qualities;
  std::vector<ProgramQuality> ordered;
  std::optional<ProgramId> chosen;
  std::optional<double> phi;
  std::optional<ActionEvent> action;
  double score = 0.0;
};

struct EpisodeHeader {
  std::uint64_t seed = 0;
  std::uint64_t trials = 0;
  std::string scenario;
  AgentConfig config;
  std::size_t n = 0;  // measurement count in force (a priori optimum or override)
  std::uint64_t kb_digest_initial = 0;
  std::uint64_t kb_digest_final = 0;
  std::vector<Task> tasks_initial;
  std::vector<Task> tasks_final;
};

struct EpisodeLog {
  EpisodeHeader header;
  std::vector<TrialLog> trials;
};

class Agent {
 public:
  Agent(std::shared_ptr<const KnowledgeBase> kb, AgentConfig config, std::uint64_t seed)
      : kb_(std::move(kb)),
        config_(std::move(config)),
        seed_(seed),
        channel_(channel_for(*kb_, config_.epsilon)),
        channel_rng_(SplitMix64::substream(seed, "channel")),
        selection_rng_(SplitMix64::substream(seed, "selection")) {
    config_.econ.validate();
    if (config_.fixed_n && *config_.fixed_n == 0) throw Error(Errc::InvalidCount, "fixed n must be >= 1");
    n_ = config_.fixed_n ? *config_.fixed_n
                         : a_priori_measurement_count(*kb_, channel_, config_.econ, config_.mode);
  }

  const KnowledgeBase& kb() const noexcept { return *kb_; }
  const AgentConfig& config() const noexcept { return config_; }
  std::uint64_t seed() const noexcept { return seed_; }
  std::size_t measurement_count() const noexcept { return n_; }
  const std::vector<MemoryEntry>& memory() const noexcept { return memory_; }

  /// Appends to memory. Trials are numbered 0, 1, 2, ... without gaps.
  void record(MemoryEntry entry) {
    const std::uint64_t expected = memory_.empty() ? 0 : memory_.back().t + 1;
    if (entry.t != expected)
      throw Error(Errc::NonMonotonicTrial,
                  "trial " + std::to_string(entry.t) + " recorded, expected " + std::to_string(expected));
    if (entry.outcome.status != RecognitionStatus::Unrecognized) ++recurrence_[entry.outcome.node];
    memory_.push_back(std::move(entry));
  }

  std::uint64_t recurrence_count(ObjectId object) const {
    if (object == kRootId || !kb_->contains(object))
      throw Error(Errc::UnknownObject, "object " + std::to_string(object.value));
    const auto it = recurrence_.find(object);
    return it == recurrence_.end() ? 0 : it->second;
  }

  /// Programs triggered by exactly outcome.node whose reflex threshold has
  /// been reached (memory already holds the current trial).
  std::vector<const Program*> eligible_programs(const RecognitionOutcome& outcome) const {
    std::vector<const Program*> out;
    if (outcome.status == RecognitionStatus::Unrecognized) return out;
    const std::uint64_t seen = recurrence_count(outcome.node);
    for (const Program& p : kb_->programs())
      if (p.trigger == outcome.node && p.reflex_threshold <= seen) out.push_back(&p);
    return out;
  }

  ActionEvent do_action(const Program& program, const RecognitionOutcome& outcome, std::uint64_t t) const {
    const auto eligible = eligible_programs(outcome);
    if (std::none_of(eligible.begin(), eligible.end(), [&](const Program* p) { return p->id == program.id; }))
      throw Error(Errc::IneligibleProgram,
                  "program " + std::to_string(program.id.value) + " on object " + std::to_string(outcome.node.value));
    ActionEvent event{t, program.id, outcome.node, {}, {}, {}};
    for (OperationId id : program.operations) {
      const OperationDef& op = *kb_->find_operation(id);
      event.operations.push_back(op.id);
      event.tags.push_back(op.action_tag);
      event.tasks.push_back(op.task);
    }
    return event;
  }

  TrialLog step(const FeatureVector& stimulus) {
    TrialLog log;
    log.t = memory_.empty() ? 0 : memory_.back().t + 1;
    log.n = n_;
    const MeasurementResult m = measure(*kb_, stimulus, n_, channel_, channel_rng_);
    log.denoised = m.denoised;
    log.outcome = m.outcome;
    log.agreement = m.agreement;

    record({log.t, m.outcome, n_, std::nullopt, std::nullopt, {}});
    if (m.outcome.status != RecognitionStatus::Unrecognized) log.recurrence = recurrence_count(m.outcome.node);

    for (const Program* p : eligible_programs(m.outcome)) {
      log.eligible.push_back(p->id);
      log.qualities.push_back(phi_program(*p, m.agreement, n_, config_.econ));
    }
    log.ordered = order_and_filter(log.qualities, config_.econ.phi0);
    log.chosen = select_random(log.ordered, selection_rng_);
    if (log.chosen) {
      const auto chosen = std::find_if(log.ordered.begin(), log.ordered.end(),
                                       [&](const ProgramQuality& q) { return q.program == *log.chosen; });
      log.phi = chosen->phi;
      log.action = do_action(*kb_->find_program(*log.chosen), m.outcome, log.t);
      MemoryEntry& current = memory_.back();
      current.program = log.chosen;
      current.phi = log.phi;
      current.action_tags = log.action->tags;
    }
    return log;
  }

 private:
  std::shared_ptr<const KnowledgeBase> kb_;
  AgentConfig config_;
  std::uint64_t seed_;
  ChannelParams channel_;
  SplitMix64 channel_rng_;
  SplitMix64 selection_rng_;
  std::size_t n_ = 1;
  std::vector<MemoryEntry> memory_;
  std::map<ObjectId, std::uint64_t> recurrence_;
};

using TrialHook = std::function<void(const TrialLog&)>;

/// Runs `trials` steps with stimuli from the scenario (its own "scenario"
/// substream of the agent seed) and returns the full log.
inline EpisodeLog run_episode(Agent& agent, const Scenario& scenario, std::uint64_t trials,
                              const TrialHook& hook = {}) {
  if (trials == 0) throw Error(Errc::InvalidCount, "an episode needs at least one trial");
  const KnowledgeBase& kb = agent.kb();
  EpisodeLog log;
  log.header.seed = agent.seed();
  log.header.trials = trials;
  log.header.scenario = scenario.name;
  log.header.config = agent.config();
  log.header.n = agent.measurement_count();
  log.header.kb_digest_initial = kb_digest(kb);
  log.header.tasks_initial = enumerate_tasks(kb);

  SplitMix64 scenario_rng = SplitMix64::substream(agent.seed(), "scenario");
  log.trials.reserve(trials);
  for (std::uint64_t i = 0; i < trials; ++i) {
    const Stimulus& stimulus = next_stimulus(scenario, i, scenario_rng);
    TrialLog trial = agent.step(stimulus.vector);
    trial.stimulus = stimulus;
    if (trial.action)
      for (const auto& tag : trial.action->tags) trial.score += score(scenario, tag, stimulus.truth);
    if (hook) hook(trial);
    log.trials.push_back(std::move(trial));
  }

  log.header.kb_digest_final = kb_digest(kb);
  log.header.tasks_final = enumerate_tasks(kb);
  return log;
}

}  // namespace aprior
