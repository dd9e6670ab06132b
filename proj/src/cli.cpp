#include "ctp/cli.hpp"

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "ctp/dense.hpp"
#include "ctp/dsl.hpp"
#include "ctp/gen.hpp"
#include "ctp/reductions.hpp"
#include "ctp/topology.hpp"

namespace ctp::cli {

namespace fs = std::filesystem;
using nlohmann::json;

std::string digest(const std::string &bytes) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  std::ostringstream os;
  os << "fnv1a64:" << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

namespace {

// Raised for input problems; carries the message for stderr.
struct InputError {
  std::string message;
};

std::string read_file(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw InputError{"cannot read '" + path + "'"};
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path &path, const std::string &text) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw InputError{"cannot write '" + path.string() + "'"};
  out << text;
}

// `dir/name.ctp` -> `dir/name<suffix>`
fs::path sibling(const std::string &input, const std::string &suffix) {
  fs::path p(input);
  return p.parent_path() / (p.stem().string() + suffix);
}

struct Loaded {
  std::string text;
  System sys;
};

Loaded load(const std::string &path, std::ostream &err) {
  Loaded l;
  l.text = read_file(path);
  auto res = dsl::parse(l.text);
  if (!res.ok()) {
    for (const auto &e : res.errors)
      err << path << ":" << dsl::format_error(e) << "\n";
    throw InputError{"parse failed"};
  }
  l.sys = std::move(*res.system);
  return l;
}

class Report {
public:
  Report(std::string command, std::ostream &err) : err_(err), start_(std::chrono::steady_clock::now()) {
    j_["command"] = std::move(command);
    j_["version"] = kVersion;
    j_["seed"] = nullptr;
    j_["engine"] = nullptr;
    j_["stats"] = json::object();
    j_["artifacts"] = json::array();
  }

  json &operator[](const char *key) { return j_[key]; }
  void input(const std::string &path, const std::string &text) {
    j_["input"] = path;
    j_["digest"] = digest(text);
  }
  void artifact(const fs::path &p) { j_["artifacts"].push_back(p.string()); }

  void write(const fs::path &path, int code) {
    j_["exit_code"] = code;
    j_["stats"]["wall_ms"] =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_).count();
    try {
      write_file(path, j_.dump(2) + "\n");
    } catch (const InputError &e) {
      err_ << "warning: " << e.message << "\n";
    }
  }

private:
  json j_;
  std::ostream &err_;
  std::chrono::steady_clock::time_point start_;
};

std::size_t budget_or(const std::optional<std::size_t> &flag, std::size_t fallback) {
  if (flag)
    return *flag;
  if (const char *env = std::getenv("CTP_BUDGET")) {
    try {
      return std::stoull(env);
    } catch (const std::exception &) {
      throw InputError{"CTP_BUDGET is not a number: '" + std::string(env) + "'"};
    }
  }
  return fallback;
}

bool vass_applicable(const System &sys) {
  if (sys.delay != DelayKind::Tick || !is_polyforest(sys.topology).polyforest)
    return false;
  for (const auto &c : sys.topology.channels)
    if (c.testable)
      return false;
  return true;
}

int status_code(ReachStatus s) {
  switch (s) {
  case ReachStatus::Reachable:
    return kOk;
  case ReachStatus::Unreachable:
    return kUnreachable;
  default:
    return kUnknown;
  }
}

int verdict_code(VassVerdict v) {
  switch (v) {
  case VassVerdict::Accepting:
    return kOk;
  case VassVerdict::Rejecting:
    return kUnreachable;
  default:
    return kUnknown;
  }
}

bool conflict(int a, int b) { return (a == kOk && b == kUnreachable) || (a == kUnreachable && b == kOk); }

// ---------------------------------------------------------------------------

struct Options {
  std::string file;
  std::string report;
  std::string output;
  // check
  std::string target;
  std::string engine = "auto";
  std::optional<std::size_t> bound;
  std::optional<std::size_t> budget;
  std::optional<std::size_t> depth;
  bool verify = false;
  std::size_t jobs = 1;
  // reduce / lift
  std::string to = "vass";
  std::string from = "counter";
  bool allow_orphans = false;
  // simulate / gen
  std::size_t steps = 100;
  std::uint64_t seed = 0;
  std::string profile = "tick";
};

fs::path report_path(const Options &o, const std::string &anchor) {
  return o.report.empty() ? sibling(anchor, ".report") : fs::path(o.report);
}

int cmd_classify(const Options &o, std::ostream &out, std::ostream &err) {
  Report rep("classify", err);
  auto l = load(o.file, err);
  rep.input(o.file, l.text);
  rep["engine"] = "topology";
  auto v = classify(l.sys);
  out << format_verdict(l.sys.topology, v);
  rep["verdict"] = to_string(v.status);
  json reasons = json::array();
  for (const auto &r : v.reasons) {
    json w = json::array();
    for (auto c : r.witness)
      w.push_back(l.sys.topology.channels[c].name);
    reasons.push_back({{"rule", to_string(r.rule)}, {"witness", w}, {"text", r.text}});
  }
  rep["reasons"] = reasons;
  int code = v.status == VerdictStatus::Decidable ? kOk : v.status == VerdictStatus::Undecidable ? kUndecidable : kOpen;
  rep.write(report_path(o, o.file), code);
  return code;
}

int cmd_check(const Options &o, std::ostream &out, std::ostream &err) {
  Report rep("check", err);
  auto l = load(o.file, err);
  const System &sys = l.sys;
  rep.input(o.file, l.text);
  LocationPattern target;
  try {
    target = o.target.empty() ? final_pattern(sys) : parse_target(sys, o.target);
  } catch (const Error &e) {
    throw InputError{e.what()};
  }
  rep["target"] = o.target.empty() ? "final" : o.target;

  std::string engine = o.engine;
  if (engine == "auto")
    engine = sys.delay == DelayKind::Dense ? "zone" : vass_applicable(sys) ? "vass" : "explicit";
  rep["engine"] = engine;
  const std::size_t budget = budget_or(o.budget, 2'000'000);
  auto &stats = rep["stats"];
  const fs::path witness_txt = sibling(o.file, ".witness");
  const fs::path witness_json = sibling(o.file, ".witness.json");

  auto run_explicit = [&](bool record) {
    ReachOptions ro;
    ro.channel_bound = o.bound;
    ro.depth = o.depth;
    ro.state_budget = budget;
    auto r = reach_explicit(sys, {target}, ro);
    if (record) {
      stats["states"] = r.stats.states;
      stats["transitions"] = r.stats.transitions;
      stats["max_depth"] = r.stats.max_depth;
      stats["bound_pruned"] = r.stats.bound_pruned;
      stats["depth_pruned"] = r.stats.depth_pruned;
      stats["budget_hit"] = r.stats.budget_hit;
    }
    return r;
  };
  auto emit_trace = [&](const Trace &t) {
    write_file(witness_txt, format_trace(sys, t));
    write_file(witness_json, trace_to_json(sys, t) + "\n");
    rep.artifact(witness_txt);
    rep.artifact(witness_json);
    rep["witness"] = witness_txt.string();
    out << format_trace(sys, t);
  };

  int code = kUnknown;
  std::string answer;
  if (engine == "explicit") {
    if (sys.delay == DelayKind::Dense)
      throw InputError{"the explicit engine needs a discrete-time system (use --engine zone)"};
    auto r = run_explicit(true);
    code = status_code(r.status);
    answer = to_string(r.status);
    if (r.witness)
      emit_trace(*r.witness);
  } else if (engine == "vass") {
    TickVassOptions tvo;
    tvo.allow_orphans = !sys.acceptance.empty_channels;
    tvo.target = target;
    TickVass tv;
    try {
      tv = tick_to_vass(sys, tvo);
    } catch (const Error &e) {
      throw InputError{e.what()};
    }
    VassReachOptions vo;
    vo.node_budget = budget;
    vo.state_budget = budget;
    auto acc = vass_acceptance(sys, tv, vo);
    stats["control_states"] = acc.stats.control_states;
    stats["tree_nodes"] = acc.stats.tree_nodes;
    stats["backward_tree_nodes"] = acc.stats.backward_tree_nodes;
    stats["states"] = acc.stats.states;
    stats["cap"] = acc.stats.cap;
    rep["certificate"] = acc.certificate;
    code = verdict_code(acc.verdict);
    answer = to_string(acc.verdict);
    if (acc.trace) {
      auto rp = replay(sys, *acc.trace);
      if (!rp.valid) {
        err << "differential bug: VASS witness does not replay: " << rp.reason << "\n";
        rep["differential"] = "vass witness does not replay: " + rp.reason;
        rep.write(report_path(o, o.file), kDifferential);
        return kDifferential;
      }
      emit_trace(*acc.trace);
    }
    if (!acc.certificate.empty())
      out << "certificate: " << acc.certificate << "\n";
    if (o.verify) {
      auto r = run_explicit(false);
      rep["verify"] = {{"engine", "explicit"}, {"answer", to_string(r.status)}};
      if (conflict(code, status_code(r.status))) {
        err << "differential bug: vass says " << answer << ", explicit says " << to_string(r.status) << "\n";
        rep["differential"] = "vass " + answer + " vs explicit " + std::string(to_string(r.status));
        rep.write(report_path(o, o.file), kDifferential);
        return kDifferential;
      }
    }
  } else if (engine == "zone") {
    if (sys.delay != DelayKind::Dense)
      throw InputError{"the zone engine needs a dense-time system"};
    ZoneOptions zo;
    zo.channel_bound = o.bound.value_or(3);
    zo.state_budget = budget;
    rep["bound"] = zo.channel_bound;
    auto r = zone_reach(sys, {target}, zo);
    stats["states"] = r.stats.states;
    stats["transitions"] = r.stats.transitions;
    stats["subsumed"] = r.stats.subsumed;
    stats["bound_pruned"] = r.stats.bound_pruned;
    stats["budget_hit"] = r.stats.budget_hit;
    code = status_code(r.status);
    answer = to_string(r.status);
    if (r.witness) {
      write_file(witness_txt, format_timed_trace(sys, *r.witness));
      write_file(witness_json, timed_trace_to_json(sys, *r.witness) + "\n");
      rep.artifact(witness_txt);
      rep.artifact(witness_json);
      rep["witness"] = witness_txt.string();
      out << format_timed_trace(sys, *r.witness);
    }
    if (o.verify) {
      auto d = discretize_system(sys);
      ReachOptions ro;
      ro.channel_bound = zo.channel_bound;
      ro.state_budget = budget;
      auto e = reach_explicit(d.system, {lift_target(d, target)}, ro);
      rep["verify"] = {{"engine", "discretize+explicit"}, {"answer", to_string(e.status)}};
      if (conflict(code, status_code(e.status))) {
        err << "differential bug: zone says " << answer << ", discretized says " << to_string(e.status) << "\n";
        rep["differential"] = "zone " + answer + " vs discretized " + std::string(to_string(e.status));
        rep.write(report_path(o, o.file), kDifferential);
        return kDifferential;
      }
    }
  } else {
    throw InputError{"unknown engine '" + engine + "'"};
  }
  out << "result: " << answer << "\n";
  rep["answer"] = answer;
  rep.write(report_path(o, o.file), code);
  return code;
}

template <class F>
int transform(const char *command, const Options &o, const std::string &suffix, std::ostream &out,
              std::ostream &err, F &&make) {
  Report rep(command, err);
  auto l = load(o.file, err);
  rep.input(o.file, l.text);
  std::string text;
  try {
    text = make(l.sys, rep);
  } catch (const Error &e) {
    throw InputError{e.what()};
  }
  fs::path dest = o.output.empty() ? sibling(o.file, suffix) : fs::path(o.output);
  write_file(dest, text);
  rep.artifact(dest);
  out << "wrote " << dest.string() << "\n";
  rep.write(report_path(o, o.file), kOk);
  return kOk;
}

int cmd_reduce(const Options &o, std::ostream &out, std::ostream &err) {
  if (o.to != "vass")
    throw InputError{"reduce: unknown target format '" + o.to + "'"};
  return transform("reduce", o, ".vass", out, err, [&](const System &sys, Report &rep) {
    TickVassOptions tvo;
    tvo.allow_orphans = o.allow_orphans;
    auto tv = tick_to_vass(sys, tvo);
    rep["engine"] = "tick_to_vass";
    rep["stats"]["counters"] = tv.vass.dimension();
    return export_vass(tv.vass);
  });
}

int cmd_lift(const Options &o, std::ostream &out, std::ostream &err) {
  if (o.from != "counter")
    throw InputError{"lift: unknown source kind '" + o.from + "'"};
  return transform("lift", o, "_channels.ctp", out, err, [&](const System &sys, Report &rep) {
    rep["engine"] = "counters_to_channels";
    return dsl::serialize(counters_to_channels(sys));
  });
}

int cmd_discretize(const Options &o, std::ostream &out, std::ostream &err) {
  return transform("discretize", o, "_ticks.ctp", out, err, [&](const System &sys, Report &rep) {
    auto d = discretize_system(sys);
    rep["engine"] = "regions";
    json procs = json::array();
    for (ProcessId p = 0; p < d.processes.size(); ++p)
      procs.push_back({{"process", sys.topology.processes[p]},
                       {"locations", d.processes[p].automaton.locations.size()},
                       {"transitions", d.processes[p].automaton.transitions.size()}});
    rep["stats"]["processes"] = procs;
    return dsl::serialize(d.system);
  });
}

int cmd_simulate(const Options &o, std::ostream &out, std::ostream &err) {
  Report rep("simulate", err);
  auto l = load(o.file, err);
  rep.input(o.file, l.text);
  rep["seed"] = o.seed;
  rep["engine"] = "random";
  if (l.sys.delay == DelayKind::Dense)
    throw InputError{"simulate needs a discrete-time system (discretize it first)"};
  Trace t;
  try {
    t = simulate(l.sys, o.steps, o.seed);
  } catch (const Error &e) {
    throw InputError{e.what()};
  }
  fs::path dest = o.output.empty() ? sibling(o.file, ".trace") : fs::path(o.output);
  write_file(dest, format_trace(l.sys, t));
  rep.artifact(dest);
  rep["stats"]["steps"] = t.steps.size();
  rep["stats"]["deadlocked"] = t.deadlocked;
  out << "wrote " << dest.string() << " (" << t.steps.size() << " steps" << (t.deadlocked ? ", deadlock" : "")
      << ")\n";
  rep.write(report_path(o, o.file), kOk);
  return kOk;
}

int cmd_gen(const Options &o, std::ostream &out, std::ostream &err) {
  Report rep("gen", err);
  rep["seed"] = o.seed;
  rep["profile"] = o.profile;
  rep["engine"] = "gen";
  std::string text;
  try {
    text = dsl::serialize(generate(parse_profile(o.profile), o.seed));
  } catch (const Error &e) {
    throw InputError{e.what()};
  }
  if (o.output.empty()) {
    out << text;
    return kOk;
  }
  write_file(o.output, text);
  rep.artifact(o.output);
  rep["digest"] = digest(text);
  rep.write(report_path(o, o.output), kOk);
  return kOk;
}

} // namespace

int run(const std::vector<std::string> &args, std::ostream &out, std::ostream &err) {
  CLI::App app{"Reachability tools for communicating tick, timed and counter automata", "ctp"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  Options o;

  auto file_arg = [&](CLI::App *sub) {
    sub->add_option("file", o.file, "input .ctp file")->required();
    sub->add_option("--report", o.report, "report path (default: <name>.report next to the input)");
  };

  auto *classify_cmd = app.add_subcommand("classify", "decidability verdict for the topology");
  file_arg(classify_cmd);

  auto *check = app.add_subcommand("check", "reachability of a target");
  file_arg(check);
  check->add_option("--target", o.target, "p=loc,q=loc,... (default: every process final)");
  check->add_option("--engine", o.engine, "auto, explicit, vass or zone")
      ->check(CLI::IsMember({"auto", "explicit", "vass", "zone"}));
  check->add_option("--bound", o.bound, "channel bound (zone default 3, explicit default none)");
  check->add_option("--budget", o.budget, "state / node budget (env CTP_BUDGET)");
  check->add_option("--depth", o.depth, "step bound for the explicit engine");
  check->add_flag("--verify", o.verify, "cross-check with a second engine");
  check->add_option("--jobs", o.jobs, "worker count (engines are single-threaded)")->check(CLI::PositiveNumber);

  auto *reduce = app.add_subcommand("reduce", "tick system to VASS");
  file_arg(reduce);
  reduce->add_option("--to", o.to, "target formalism")->check(CLI::IsMember({"vass"}));
  reduce->add_option("-o,--output", o.output, "output path (default: <name>.vass)");
  reduce->add_flag("--allow-orphans", o.allow_orphans, "allow messages that are never received");

  auto *lift = app.add_subcommand("lift", "counter system to a channel system");
  file_arg(lift);
  lift->add_option("--from", o.from, "source formalism")->check(CLI::IsMember({"counter"}));
  lift->add_option("-o,--output", o.output, "output path (default: <name>_channels.ctp)");

  auto *disc = app.add_subcommand("discretize", "dense system to a tick system");
  file_arg(disc);
  disc->add_option("-o,--output", o.output, "output path (default: <name>_ticks.ctp)");

  auto *sim = app.add_subcommand("simulate", "random run of a discrete system");
  file_arg(sim);
  sim->add_option("--steps", o.steps, "maximum number of steps");
  sim->add_option("--seed", o.seed, "random seed");
  sim->add_option("-o,--output", o.output, "output path (default: <name>.trace)");

  auto *gen = app.add_subcommand("gen", "random system");
  gen->add_option("--profile", o.profile, "preset or key=value list, e.g. dense,shape=polytree");
  gen->add_option("--seed", o.seed, "random seed");
  gen->add_option("-o,--output", o.output, "output path (default: stdout)");
  gen->add_option("--report", o.report, "report path (default: <output>.report)");

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp &) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp &) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::CallForVersion &) {
    out << kVersion << "\n";
    return kOk;
  } catch (const CLI::ParseError &e) {
    err << "error: " << e.what() << "\n";
    return kInputError;
  }

  try {
    if (classify_cmd->parsed())
      return cmd_classify(o, out, err);
    if (check->parsed())
      return cmd_check(o, out, err);
    if (reduce->parsed())
      return cmd_reduce(o, out, err);
    if (lift->parsed())
      return cmd_lift(o, out, err);
    if (disc->parsed())
      return cmd_discretize(o, out, err);
    if (sim->parsed())
      return cmd_simulate(o, out, err);
    if (gen->parsed())
      return cmd_gen(o, out, err);
  } catch (const InputError &e) {
    err << "error: " << e.message << "\n";
    return kInputError;
  } catch (const Error &e) {
    err << "error: " << e.what() << "\n";
    return kInputError;
  }
  return kInputError;
}

} // namespace ctp::cli
