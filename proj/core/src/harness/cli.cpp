#include "dhmm/harness/cli.hpp"

#include <exception>
#include <functional>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "dhmm/errors.hpp"
#include "dhmm/harness/commands.hpp"

namespace dhmm::harness {

namespace {

using Command = std::function<int(const CommandOptions&, std::ostream&)>;

struct RawFlags {
  std::string config;
  std::string out = "out";
  std::optional<std::uint64_t> seed;
  std::optional<long long> runs;
  std::optional<long long> horizon;
  std::optional<long long> threads;
  bool emit_beliefs = false;
};

void add_common(CLI::App* sub, RawFlags& f, bool config_required) {
  auto* c = sub->add_option("--config", f.config, "experiment JSON file or preset name");
  if (config_required) c->required();
  sub->add_option("--seed", f.seed, "master seed");
  sub->add_option("--runs", f.runs, "Monte Carlo runs");
  sub->add_option("--horizon", f.horizon, "steps per run");
  sub->add_option("--threads", f.threads, "worker threads (0 = hardware)");
  sub->add_option("--out", f.out, "output directory");
}

std::optional<std::size_t> positive(const std::optional<long long>& v, const char* name, bool allow_zero) {
  if (!v) return std::nullopt;
  if (*v < 0 || (!allow_zero && *v == 0)) {
    throw ValidationError(std::string("--") + name + " must be " + (allow_zero ? "non-negative" : "positive"));
  }
  return static_cast<std::size_t>(*v);
}

CommandOptions resolve(const RawFlags& f) {
  CommandOptions o;
  o.config = f.config;
  o.out = f.out;
  o.emit_beliefs = f.emit_beliefs;
  o.overrides.seed = f.seed;
  o.overrides.runs = positive(f.runs, "runs", false);
  o.overrides.horizon = positive(f.horizon, "horizon", false);
  o.overrides.threads = positive(f.threads, "threads", true);
  return o;
}

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"Distributed filtering of hidden Markov models over networks"};
  app.require_subcommand(1);
  RawFlags flags;
  Command command;

  auto* simulate = app.add_subcommand("simulate", "per-step records of every run");
  add_common(simulate, flags, true);
  simulate->add_flag("--emit-beliefs", flags.emit_beliefs, "also write full belief vectors");
  simulate->callback([&] { command = cmd_simulate; });

  auto* risk = app.add_subcommand("risk", "expected KL risk against the centralized filter");
  add_common(risk, flags, true);
  risk->callback([&] { command = cmd_risk; });

  auto* error = app.add_subcommand("error", "error probabilities of the MAP estimate");
  add_common(error, flags, true);
  error->callback([&] { command = cmd_error; });

  auto* oracle = app.add_subcommand("oracle", "grid density evolution against Monte Carlo");
  add_common(oracle, flags, true);
  oracle->callback([&] { command = cmd_oracle; });

  auto* counter = app.add_subcommand("counterexample", "three-agent consensus counter-example");
  add_common(counter, flags, false);
  counter->callback([&] { command = cmd_counterexample; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitValidation;
  }

  try {
    return command(resolve(flags), std::cout);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

}  // namespace dhmm::harness
