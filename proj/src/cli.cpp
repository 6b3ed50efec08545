#include "hmmon/cli.hpp"

#include <fstream>
#include <memory>
#include <ostream>

#include <CLI11.hpp>

#include "hmmon/errors.hpp"
#include "hmmon/inference.hpp"
#include "hmmon/learner.hpp"
#include "hmmon/model_io.hpp"
#include "hmmon/oracle.hpp"
#include "hmmon/transform.hpp"
#include "hmmon/verifier.hpp"

namespace hmmon {

namespace {

struct RunConfig {
  std::string hmm_path;
  std::string dfa_path;
  std::string model_path;
  std::string trace;
  std::string safe = "0";
  std::string learn;
  std::string unsafe;
  unsigned horizon = 1;
  std::uint64_t seed = 0;
  std::size_t safe_samples = 100;
  std::size_t unsafe_samples = 100;
  std::size_t max_rounds = LearnLimits{}.max_rounds;
  std::size_t max_states = LearnLimits{}.max_states;
  std::uint64_t budget = EnumerateOptions{}.budget;
  unsigned jobs = 1;
  std::string output;
  std::string report;
  std::string diagnostics;
  std::string check = "both";
  std::string mode = "missed";
  std::string variant = "upto";
  bool dot = false;
  bool timings = false;
};

Rational threshold(const std::string& text, const char* name) {
  try {
    return parse_rational(text);
  } catch (const std::invalid_argument& e) {
    throw ValidationError(std::string(name) + ": " + e.what());
  }
}

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

Trace read_trace(const Alphabet& alphabet, const std::string& arg) {
  const std::string text = !arg.empty() && arg[0] == '@' ? trim(read_file(arg.substr(1))) : arg;
  try {
    return parse_trace(alphabet, text);
  } catch (const std::invalid_argument& e) {
    throw ValidationError(e.what());
  }
}

void emit(std::ostream& out, const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    out << text;
  } else {
    write_file(path, text);
  }
}

std::string one_line(std::string s) {
  for (char& c : s) {
    if (c == '\n' || c == '\r') c = ' ';
  }
  return s;
}

int cmd_risk(const RunConfig& cfg, std::ostream& out) {
  const Hmm m = load_hmm(cfg.hmm_path);
  out << to_string(trace_risk(m, read_trace(m.observations(), cfg.trace))) << '\n';
  return 0;
}

int cmd_verify(const RunConfig& cfg, std::ostream& out) {
  const Hmm m = load_hmm(cfg.hmm_path);
  const Dfa a = load_dfa(cfg.dfa_path);
  Thresholds th{threshold(cfg.safe, "--ls"), threshold(cfg.safe, "--ls"), threshold(cfg.unsafe, "--lu"), cfg.horizon};
  th.validate();
  std::unique_ptr<std::ofstream> diag;
  VerifyOptions options{cfg.jobs, nullptr};
  if (!cfg.diagnostics.empty()) {
    diag = std::make_unique<std::ofstream>(cfg.diagnostics);
    if (!*diag) throw std::runtime_error(cfg.diagnostics + ": cannot write file");
    options.diagnostics = diag.get();
  }
  Verdict v;
  if (cfg.check == "missed") {
    v = check_missed_alarms(m, a, th.unsafe, th.horizon, options);
  } else if (cfg.check == "false") {
    v = check_false_alarms(m, a, th.safe, th.horizon, options);
  } else {
    v = check_monitor(m, a, th, options);
  }
  emit(out, cfg.output, to_json(v, m.observations(), cfg.timings));
  return v.correct() ? 0 : 2;
}

int cmd_learn(const RunConfig& cfg, std::ostream& out) {
  const Hmm m = load_hmm(cfg.hmm_path);
  const Rational safe = threshold(cfg.safe, "--ls");
  const Rational unsafe = threshold(cfg.unsafe, "--lu");
  const Rational learn = cfg.learn.empty() ? safe : threshold(cfg.learn, "--ll");
  Thresholds th{safe, learn, unsafe, cfg.horizon};
  th.validate();
  LearnOptions options;
  options.conformance = {cfg.safe_samples, cfg.unsafe_samples};
  options.limits = {cfg.max_rounds, cfg.max_states};
  options.seed = cfg.seed;
  options.verify.jobs = cfg.jobs;
  const LearnReport report = learn_monitor(m, th, options);
  if (!cfg.output.empty()) {
    write_file(cfg.output + ".dfa.json", to_json(report.monitor));
    if (cfg.dot) write_file(cfg.output + ".dot", to_dot(report.monitor));
  }
  emit(out, cfg.report, to_json(report, m.observations(), cfg.timings));
  return report.status == LearnStatus::learned ? 0 : 3;
}

int cmd_enumerate(const RunConfig& cfg, std::ostream& out) {
  const Hmm m = load_hmm(cfg.hmm_path);
  const TraceTable table = enumerate_trace_risks(m, cfg.horizon, {cfg.budget, cfg.jobs});
  emit(out, cfg.output, to_csv(table, m.observations()));
  return 0;
}

int cmd_gadget(const RunConfig& cfg, std::ostream& out) {
  const CnfFormula f = parse_dimacs(read_file(cfg.model_path));
  const Hmm g = cnf_gadget(f);
  emit(out, cfg.output, cfg.dot ? to_dot(g) : to_json(g));
  return 0;
}

int cmd_export(const RunConfig& cfg, std::ostream& out) {
  if (cfg.dfa_path.empty()) {
    const Model model = load_model(cfg.model_path);
    std::visit([&](const auto& m) { emit(out, cfg.output, cfg.dot ? to_dot(m) : to_json(m)); }, model);
    return 0;
  }
  const Hmm m = load_hmm(cfg.model_path);
  const Dfa a = load_dfa(cfg.dfa_path);
  const AlarmMode mode = cfg.mode == "false" ? AlarmMode::false_alarm : AlarmMode::missed_alarm;
  const bool up_to = cfg.variant == "upto";
  const ProductHmm prod = product(m, a, mode);
  const UnrolledHmm u =
      unroll_with_risk(prod, cfg.horizon, up_to ? UnrollEntry::every_step : UnrollEntry::initial_only);
  const ColoredMdp mdp = build_colored_mdp(u, up_to ? HorizonVariant::up_to : HorizonVariant::exact);
  emit(out, cfg.output, cfg.dot ? to_dot(mdp) : to_json(mdp));
  return 0;
}

void add_thresholds(CLI::App* cmd, RunConfig& cfg, bool with_learn) {
  cmd->add_option("--ls", cfg.safe, "safe threshold, p/q")->required();
  if (with_learn) cmd->add_option("--ll", cfg.learn, "learning threshold, p/q (default: --ls)");
  cmd->add_option("--lu", cfg.unsafe, "unsafe threshold, p/q")->required();
  cmd->add_option("--horizon", cfg.horizon, "horizon h >= 1")->required()->check(CLI::PositiveNumber);
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  CLI::App app{"Verify and learn runtime monitors for hidden Markov models"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "show help for all subcommands");

  auto* risk = app.add_subcommand("risk", "print the risk of a trace");
  risk->add_option("hmm", cfg.hmm_path, "HMM file")->required();
  risk->add_option("trace", cfg.trace, "comma-separated observations or @file")->required();

  auto* verify = app.add_subcommand("verify", "check a monitor for missed and false alarms");
  verify->add_option("hmm", cfg.hmm_path, "HMM file")->required();
  verify->add_option("dfa", cfg.dfa_path, "monitor file")->required();
  add_thresholds(verify, cfg, false);
  verify->add_option("--check", cfg.check, "which alarms to look for")
      ->check(CLI::IsMember({"both", "missed", "false"}));
  verify->add_option("--jobs", cfg.jobs, "worker threads")->check(CLI::PositiveNumber);
  verify->add_option("--diagnostics", cfg.diagnostics, "write one JSON line per search node to this file");
  verify->add_flag("--timings", cfg.timings, "include wall-clock times in the output");
  verify->add_option("-o,--output", cfg.output, "write the verdict here instead of stdout");

  auto* learn = app.add_subcommand("learn", "learn a correct monitor");
  learn->add_option("hmm", cfg.hmm_path, "HMM file")->required();
  add_thresholds(learn, cfg, true);
  learn->add_option("--seed", cfg.seed, "sampling seed");
  learn->add_option("--safe-samples", cfg.safe_samples, "conformance samples at the safe threshold");
  learn->add_option("--unsafe-samples", cfg.unsafe_samples, "conformance samples at the unsafe threshold");
  learn->add_option("--max-rounds", cfg.max_rounds, "abort after this many counterexamples");
  learn->add_option("--max-states", cfg.max_states, "abort once a hypothesis is larger");
  learn->add_option("--jobs", cfg.jobs, "worker threads for verification")->check(CLI::PositiveNumber);
  learn->add_option("-o,--output", cfg.output, "output prefix for PREFIX.dfa.json (and PREFIX.dot)");
  learn->add_option("--report", cfg.report, "write the report here instead of stdout");
  learn->add_flag("--dot", cfg.dot, "also write PREFIX.dot");
  learn->add_flag("--timings", cfg.timings, "include wall-clock time in the report");

  auto* enumerate = app.add_subcommand("enumerate", "list every trace up to the horizon with its risk");
  enumerate->add_option("hmm", cfg.hmm_path, "HMM file")->required();
  enumerate->add_option("--horizon", cfg.horizon, "horizon h >= 1")->required()->check(CLI::PositiveNumber);
  enumerate->add_option("--budget", cfg.budget, "maximum number of path prefixes");
  enumerate->add_option("--jobs", cfg.jobs, "worker threads")->check(CLI::PositiveNumber);
  enumerate->add_option("-o,--output", cfg.output, "write CSV here instead of stdout");

  auto* gadget = app.add_subcommand("gadget", "build the clause-gadget HMM of a DIMACS CNF formula");
  gadget->add_option("cnf", cfg.model_path, "DIMACS file")->required();
  gadget->add_flag("--dot", cfg.dot, "emit DOT instead of JSON");
  gadget->add_option("-o,--output", cfg.output, "write here instead of stdout");

  auto* exp = app.add_subcommand("export", "re-emit a model as JSON/DOT, or build a colored MDP");
  exp->add_option("model", cfg.model_path, "HMM or DFA file")->required();
  exp->add_option("--monitor", cfg.dfa_path, "monitor file; exports the colored MDP of model x monitor");
  exp->add_option("--horizon", cfg.horizon, "horizon for the colored MDP")->check(CLI::PositiveNumber);
  exp->add_option("--mode", cfg.mode, "alarm kind searched by the MDP")->check(CLI::IsMember({"missed", "false"}));
  exp->add_option("--variant", cfg.variant, "trace lengths: exactly h or up to h")
      ->check(CLI::IsMember({"exact", "upto"}));
  exp->add_flag("--dot", cfg.dot, "emit DOT instead of JSON");
  exp->add_option("-o,--output", cfg.output, "write here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "error: " << one_line(e.what()) << '\n';
    return 1;
  }

  try {
    if (risk->parsed()) return cmd_risk(cfg, out);
    if (verify->parsed()) return cmd_verify(cfg, out);
    if (learn->parsed()) return cmd_learn(cfg, out);
    if (enumerate->parsed()) return cmd_enumerate(cfg, out);
    if (gadget->parsed()) return cmd_gadget(cfg, out);
    if (exp->parsed()) return cmd_export(cfg, out);
  } catch (const std::exception& e) {
    err << "error: " << one_line(e.what()) << '\n';
    return 1;
  }
  return 1;
}

}  // namespace hmmon
