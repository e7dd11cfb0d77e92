// aprior: validate knowledge bases, run episodes, sweep measurement counts
// and audit episode logs.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "aprior/cli.hpp"

namespace {

std::optional<std::uint64_t> seed_from_env() {
  const char* text = std::getenv("APRIOR_SEED");
  if (text == nullptr || *text == '\0') return std::nullopt;
  try {
    std::size_t used = 0;
    const auto value = std::stoull(text, &used, 0);
    if (text[used] != '\0') return std::nullopt;
    return value;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

void add_economy(CLI::App* cmd, aprior::MeasurementEconomy& econ) {
  cmd->add_option("--V,--value", econ.value, "Payoff of acting on a correct recognition")->capture_default_str();
  cmd->add_option("--c,--cost", econ.cost, "Cost per measurement")->capture_default_str();
  cmd->add_option("--n-max", econ.n_max, "Largest measurement count considered")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  using namespace aprior;
  CLI::App app{"Closed-world agent simulator and auditor"};
  app.require_subcommand(1);
  std::string mode_text = "exact";

  std::string validate_path;
  auto* validate = app.add_subcommand("validate", "Build and seal a KB document, print its digest");
  validate->add_option("kb", validate_path, "KB document")->required();

  cli::RunConfig run;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> fixed_n;
  std::string format_text = "jsonl";
  auto* run_cmd = app.add_subcommand("run", "Run one episode and write its log");
  run_cmd->add_option("--kb", run.kb_path, "KB document")->required();
  run_cmd->add_option("--scenario", run.scenario_path, "Scenario document")->required();
  run_cmd->add_option("--seed", seed, "64-bit seed (falls back to APRIOR_SEED, then 0)");
  run_cmd->add_option("--trials,-T", run.trials, "Number of trials")->check(CLI::PositiveNumber)->capture_default_str();
  add_economy(run_cmd, run.econ);
  run_cmd->add_option("--phi0", run.econ.phi0, "Program quality threshold")->capture_default_str();
  run_cmd->add_option("--epsilon", run.epsilon, "Per-feature corruption probability")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  run_cmd->add_option("--fixed-n", fixed_n, "Override the a priori measurement count")->check(CLI::PositiveNumber);
  run_cmd->add_option("--out,-o", run.output_path, "Output file")->required();
  run_cmd->add_option("--format", format_text, "jsonl or csv")->check(CLI::IsMember({"jsonl", "csv"}))->capture_default_str();
  run_cmd->add_option("--mode", mode_text, "exact, mc or auto")->check(CLI::IsMember({"exact", "mc", "auto"}))->capture_default_str();
  run_cmd->add_flag("--strict", run.strict, "Audit every trial inline");

  cli::SweepConfig sweep;
  auto* sweep_cmd = app.add_subcommand("sweep", "Tabulate Perr(n) and Phi(n) for a leaf");
  sweep_cmd->add_option("--kb", sweep.kb_path, "KB document")->required();
  sweep_cmd->add_option("--node", sweep.node, "Leaf object id or name")->required();
  sweep_cmd->add_option("--epsilon", sweep.epsilon, "Per-feature corruption probability")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  add_economy(sweep_cmd, sweep.econ);
  sweep_cmd->add_option("--mode", mode_text, "exact, mc or auto")->check(CLI::IsMember({"exact", "mc", "auto"}))->capture_default_str();
  sweep_cmd->add_option("--out,-o", sweep.output_path, "CSV file (default stdout)");

  std::string audit_log, audit_kb;
  auto* audit = app.add_subcommand("audit", "Check an episode log against its KB document");
  audit->add_option("log", audit_log, "Episode log (JSON lines)")->required();
  audit->add_option("--kb", audit_kb, "KB document")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : cli::kExitError;
  }

  if (*validate) return cli::cmd_validate(validate_path, std::cout, std::cerr);
  if (*run_cmd) {
    run.seed = seed ? *seed : seed_from_env().value_or(0);
    run.fixed_n = fixed_n;
    run.format = format_text == "csv" ? cli::OutputFormat::Csv : cli::OutputFormat::Jsonl;
    run.mode = parse_mode(mode_text);
    return cli::cmd_run(run, std::cout, std::cerr);
  }
  if (*sweep_cmd) {
    sweep.mode = parse_mode(mode_text);
    return cli::cmd_sweep(sweep, std::cout, std::cerr);
  }
  if (*audit) return cli::cmd_audit(audit_log, audit_kb, std::cout, std::cerr);
  return cli::kExitError;
}
