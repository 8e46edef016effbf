#include <cstdlib>
#include <fstream>
#include <future>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "cli.hpp"
#include "sercg/corpus.hpp"
#include "sercg/vuln.hpp"

namespace sercg::cli {

namespace fs = std::filesystem;

namespace {

// Input problems detected before or while loading.
struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw InputError("cannot read " + p.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void emit(const fs::path& p, const std::string& text) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << text;
}

fs::path default_out() {
  if (const char* d = std::getenv("SERCG_OUT_DIR"); d && *d) return d;
  return ".";
}

struct Common {
  std::string input;
  std::string entrypoints;
  std::string scope;
  std::string policy = "0-1cfa";
  std::string mode = "seneca";
  std::string out;
  std::size_t ceiling = 10000;

  fs::path out_dir() const { return out.empty() ? default_out() : fs::path(out); }

  analysis::Options options() const {
    auto p = analysis::parse_policy(policy);
    if (!p) throw InputError("unknown policy " + policy);
    auto m = analysis::parse_mode(mode);
    if (!m) throw InputError("unknown mode " + mode);
    return {*p, *m, ceiling};
  }

  // A fixture directory supplies program.sir and the sibling CSVs.
  fs::path program_file() const { return fs::is_directory(input) ? fs::path(input) / "program.sir" : fs::path(input); }
  fs::path sibling(const std::string& explicit_path, const char* name) const {
    if (!explicit_path.empty()) return explicit_path;
    if (fs::is_directory(input)) return fs::path(input) / name;
    return program_file().parent_path() / name;
  }

  sir::Program program() const {
    auto p = sir::parse_program(slurp(program_file()));
    auto sc = sibling(scope, "scope.csv");
    if (!scope.empty() || fs::exists(sc)) sir::apply_scope_file(p, slurp(sc));
    return p;
  }
  std::vector<sir::MethodSignature> entries() const {
    auto path = sibling(entrypoints, "entrypoints.csv");
    if (!fs::exists(path)) throw InputError("missing entrypoints file " + path.string());
    return sir::parse_entrypoints(slurp(path));
  }
};

void add_common(CLI::App* app, Common& c, bool analysis_flags = true) {
  app->add_option("input", c.input, "SIR program or fixture directory")->required();
  app->add_option("-e,--entrypoints", c.entrypoints, "entrypoint CSV (default: entrypoints.csv beside the program)");
  app->add_option("--scope", c.scope, "class,scope CSV");
  app->add_option("-o,--out", c.out, "output directory (default: $SERCG_OUT_DIR or .)");
  if (analysis_flags) {
    app->add_option("-p,--policy", c.policy, "cha, rta, 0cfa, 0-1cfa or 1cfa")->capture_default_str();
    app->add_option("-m,--mode", c.mode, "seneca, baseline or downcast")->capture_default_str();
    app->add_option("--visit-ceiling", c.ceiling, "method visits before giving up")->capture_default_str();
  }
}

int cmd_graph(const Common& c, const std::string& format, std::ostream& out) {
  auto program = c.program();
  auto solver = analysis::analyze(program, c.entries(), c.options());
  auto dir = c.out_dir();
  if (format == "json" || format == "both") emit(dir / "callgraph.json", analysis::to_json(*solver));
  if (format == "dot" || format == "both") emit(dir / "callgraph.dot", analysis::to_dot(*solver));
  out << "nodes " << solver->node_count() << ", edges " << solver->edges().size() << ", extra rounds "
      << solver->extra_rounds() << "\n";
  return kOk;
}

struct OracleArgs {
  std::string entry;
  std::vector<std::string> argv;
  std::string argv_file;
  std::vector<std::string> payloads;
  bool mismatch = false;
  std::size_t budget = 1'000'000;
};

std::vector<oracle::SerializedForm> read_payloads(const std::string& path) {
  auto text = slurp(path);
  auto j = nlohmann::json::parse(text, nullptr, false);
  if (j.is_discarded()) throw InputError(path + ": not JSON");
  std::vector<oracle::SerializedForm> forms;
  try {
    if (j.is_array())
      for (const auto& e : j) forms.push_back(oracle::form_from_json(e.dump()));
    else
      forms.push_back(oracle::form_from_json(text));
  } catch (const std::invalid_argument& e) {
    throw InputError(path + ": " + e.what());
  }
  return forms;
}

int cmd_oracle(const Common& c, const OracleArgs& a, std::ostream& out, std::ostream& err) {
  auto program = c.program();
  sir::MethodSignature entry;
  if (!a.entry.empty()) {
    auto sig = sir::parse_method_signature(a.entry);
    if (!sig) throw InputError("bad entry signature " + a.entry);
    entry = *sig;
  } else {
    auto eps = c.entries();
    if (eps.empty()) throw InputError("no entrypoint given");
    entry = eps.front();
  }
  oracle::Options o;
  o.step_budget = a.budget;
  o.mismatch = a.mismatch;
  for (const auto& p : a.payloads)
    for (auto& f : read_payloads(p)) o.preload.push_back(std::move(f));
  if (a.payloads.empty() && fs::is_directory(c.input) && fs::exists(fs::path(c.input) / "payload.json"))
    o.preload = read_payloads((fs::path(c.input) / "payload.json").string());
  auto args = a.argv;
  std::string argv_file = a.argv_file;
  if (argv_file.empty() && args.empty() && fs::is_directory(c.input) && fs::exists(fs::path(c.input) / "argv.txt"))
    argv_file = (fs::path(c.input) / "argv.txt").string();
  if (!argv_file.empty()) {
    std::istringstream in(slurp(argv_file));
    for (std::string l; std::getline(in, l);)
      if (!l.empty()) args.push_back(l);
  }
  oracle::Result r;
  try {
    r = oracle::interpret(program, entry, args, o);
  } catch (const oracle::OracleError& e) {
    throw InputError(e.what());
  }
  auto dir = c.out_dir();
  emit(dir / "dcg.json", r.dcg.to_json());
  emit(dir / "dcg.csv", r.dcg.to_csv());
  std::string trace;
  for (const auto& t : r.trace) trace += t + "\n";
  emit(dir / "trace.txt", trace);
  for (const auto& l : r.output) out << l << "\n";
  out << "edges " << r.dcg.edges.size() << ", steps " << r.steps << "\n";
  if (r.error) {
    err << "runtime error " << oracle::to_string(*r.error) << ": " << r.error_message << "\n";
    if (*r.error == oracle::ErrorKind::StepBudgetExceeded) return kCeiling;
  }
  return kOk;
}

int cmd_eval(const std::vector<std::string>& inputs, const Common& c, std::size_t jobs, bool strict, bool table,
             std::ostream& out, std::ostream& err) {
  auto options = c.options();
  std::vector<fs::path> dirs;
  for (const auto& i : inputs) {
    if (!fs::exists(i)) throw InputError("no such fixture " + i);
    for (auto& d : corpus::discover(i)) dirs.push_back(d);
  }
  std::vector<corpus::Fixture> fixtures;
  for (const auto& d : dirs) fixtures.push_back(corpus::load(d));
  std::vector<eval::FixtureReport> reports(fixtures.size());
  std::vector<std::string> warnings(fixtures.size());
  auto work = [&](std::size_t i) {
    auto o = corpus::evaluate(fixtures[i], options);
    if (o.run.error) warnings[i] = fixtures[i].name + ": oracle stopped with " + std::string(oracle::to_string(*o.run.error));
    reports[i] = std::move(o.report);
  };
  jobs = std::max<std::size_t>(1, jobs);
  std::exception_ptr failure;
  for (std::size_t base = 0; base < fixtures.size(); base += jobs) {
    std::vector<std::future<void>> batch;
    for (std::size_t i = base; i < std::min(fixtures.size(), base + jobs); ++i)
      batch.push_back(std::async(jobs == 1 ? std::launch::deferred : std::launch::async, work, i));
    for (auto& f : batch) try {
        f.get();
      } catch (...) {
        if (!failure) failure = std::current_exception();
      }
  }
  if (failure) std::rethrow_exception(failure);
  for (const auto& w : warnings)
    if (!w.empty()) err << w << "\n";
  auto dir = c.out_dir();
  emit(dir / "eval.json", eval::reports_to_json(reports));
  auto text = eval::reports_to_table(reports);
  emit(dir / "eval.txt", text);
  if (table) out << text;
  std::size_t pass = 0, total = 0;
  for (const auto& r : reports)
    for (const auto& v : r.verdicts) {
      ++total;
      pass += v.pass;
    }
  out << "annotations passed " << pass << "/" << total << " over " << reports.size() << " fixtures\n";
  return strict && pass != total ? kFailure : kOk;
}

int cmd_vuln(const Common& c, const std::string& sinks_path, bool default_sinks, std::size_t max_nodes,
             std::ostream& out, std::ostream& err) {
  std::string csv;
  auto path = c.sibling(sinks_path, "sinks.csv");
  if (!sinks_path.empty() || (!default_sinks && fs::exists(path))) {
    if (!fs::exists(path)) throw InputError("missing sinks file " + path.string());
    csv = slurp(path);
  } else if (default_sinks) {
    csv = std::string(vuln::default_sinks_csv());
  } else {
    throw InputError("no sinks file (pass --sinks or --default-sinks)");
  }
  auto sinks = vuln::load_sinks(csv);
  for (const auto& w : sinks.warnings) err << w << "\n";
  auto program = c.program();
  auto solver = analysis::analyze(program, c.entries(), c.options());
  auto r = vuln::find_vulnerable_paths(*solver, sinks.sinks, max_nodes);
  auto dir = c.out_dir();
  emit(dir / "paths.json", vuln::paths_to_json(*solver, r));
  auto chains = vuln::render_chains(*solver, r);
  emit(dir / "chains.txt", chains);
  out << chains << r.paths.size() << " paths\n";
  return kOk;
}

int cmd_battery(const std::string& base, const std::vector<std::string>& gadgets_in, const std::string& out_opt,
                const std::vector<std::string>& chains, std::ostream& out) {
  fs::path source_file = fs::is_directory(base) ? fs::path(base) / "base.sir" : fs::path(base);
  auto source = slurp(source_file);
  auto gadgets = gadgets_in;
  auto listed = source_file.parent_path() / "gadgets.csv";
  if (gadgets.empty() && fs::exists(listed)) {
    std::istringstream in(slurp(listed));
    for (std::string l; std::getline(in, l);)
      if (!l.empty() && l[0] != '#') gadgets.push_back(l);
  }
  if (gadgets.empty()) gadgets = fixtures::callback_classes(sir::parse_program(source));
  auto cases = fixtures::generate_battery(source, gadgets);
  for (const auto& spec : chains) {
    // name:links:sink
    auto a = spec.find(':'), b = spec.find(':', a == std::string::npos ? a : a + 1);
    if (a == std::string::npos || b == std::string::npos) throw InputError("chain spec must be name:links:sink");
    std::size_t links = 0;
    try {
      links = std::stoul(spec.substr(a + 1, b - a - 1));
    } catch (const std::exception&) {
      throw InputError("bad link count in " + spec);
    }
    try {
      cases.push_back(fixtures::generate_chain(spec.substr(0, a), links, spec.substr(b + 1)));
    } catch (const std::invalid_argument& e) {
      throw InputError(e.what());
    }
  }
  fs::path dir = out_opt.empty() ? default_out() : fs::path(out_opt);
  for (const auto& c : cases) {
    auto problems = fixtures::check_case(c);
    if (!problems.empty()) throw std::runtime_error(c.name + ": " + problems.front());
    fixtures::write_case(c, dir / c.name);
  }
  out << cases.size() << " fixtures written to " << dir.string() << "\n";
  return kOk;
}

bool is_input_error(const std::exception& e) {
  return dynamic_cast<const InputError*>(&e) || dynamic_cast<const sir::ParseError*>(&e) ||
         dynamic_cast<const sir::UnknownClass*>(&e) || dynamic_cast<const analysis::UnknownEntrypoint*>(&e) ||
         dynamic_cast<const eval::MalformedAnnotation*>(&e) || dynamic_cast<const eval::UnknownAnnotationTarget*>(&e) ||
         dynamic_cast<const vuln::MalformedSinkLine*>(&e) || dynamic_cast<const fixtures::NoCallbacks*>(&e);
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Serialization-aware call-graph construction for SIR programs", "sercg"};
  app.require_subcommand(1);

  Common graph_c;
  std::string format = "both";
  auto* graph = app.add_subcommand("graph", "build a call graph; writes callgraph.json and callgraph.dot");
  add_common(graph, graph_c);
  graph->add_option("--format", format, "json, dot or both")
      ->check(CLI::IsMember({"json", "dot", "both"}))
      ->capture_default_str();

  Common oracle_c;
  OracleArgs oa;
  auto* orc = app.add_subcommand("oracle", "run a program; writes dcg.json, dcg.csv and trace.txt");
  add_common(orc, oracle_c, false);
  orc->add_option("--entry", oa.entry, "entry method (default: first entrypoint)");
  orc->add_option("--arg", oa.argv, "program argument (repeatable)");
  orc->add_option("--argv-file", oa.argv_file, "one program argument per line");
  orc->add_option("--payload", oa.payloads, "serialized form placed on its channel before running (repeatable)");
  orc->add_flag("--mismatch", oa.mismatch, "honour missing superclass data in payloads");
  orc->add_option("--budget", oa.budget, "interpreter step budget")->capture_default_str();

  Common eval_c;
  std::vector<std::string> eval_inputs;
  std::size_t jobs = 1;
  bool strict = false, quiet = false;
  auto* ev = app.add_subcommand("eval", "compare static graphs with oracle runs over fixture directories");
  ev->add_option("fixtures", eval_inputs, "fixture directories or trees of them");
  ev->add_option("-p,--policy", eval_c.policy)->capture_default_str();
  ev->add_option("-m,--mode", eval_c.mode)->capture_default_str();
  ev->add_option("-o,--out", eval_c.out, "output directory (default: $SERCG_OUT_DIR or .)");
  ev->add_option("-j,--jobs", jobs, "fixtures evaluated in parallel")->capture_default_str();
  ev->add_flag("--strict", strict, "exit 1 when an annotation fails");
  ev->add_flag("-q,--quiet", quiet, "omit the table on standard output");

  Common vuln_c;
  std::string sinks;
  bool default_sinks = false;
  std::size_t max_nodes = 15;
  auto* vu = app.add_subcommand("vuln", "report call paths from deserialization to sinks");
  add_common(vu, vuln_c);
  vu->add_option("-s,--sinks", sinks, "signature,category CSV (default: sinks.csv beside the program)");
  vu->add_flag("--default-sinks", default_sinks, "use the bundled sink list");
  vu->add_option("--max-nodes", max_nodes, "longest path reported")->capture_default_str();

  std::string base, battery_out;
  std::vector<std::string> gadgets, chains;
  auto* bat = app.add_subcommand("battery", "generate write/read fixtures for gadget classes");
  bat->add_option("base", base, "base program or directory with base.sir and gadgets.csv")->required();
  bat->add_option("-g,--gadgets", gadgets, "gadget classes")->delimiter(',');
  bat->add_option("--chain", chains, "extra gadget chain name:links:sink (repeatable)");
  bat->add_option("-o,--out", battery_out, "output directory (default: $SERCG_OUT_DIR or .)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "sercg: " << e.what() << "\n";
    return kInputError;
  }

  try {
    if (*graph) return cmd_graph(graph_c, format, out);
    if (*orc) return cmd_oracle(oracle_c, oa, out, err);
    if (*ev) return cmd_eval(eval_inputs, eval_c, jobs, strict, !quiet, out, err);
    if (*vu) return cmd_vuln(vuln_c, sinks, default_sinks, max_nodes, out, err);
    if (*bat) return cmd_battery(base, gadgets, battery_out, chains, out);
  } catch (const analysis::IterationCeiling& e) {
    err << "sercg: " << e.what() << "\n";
    return kCeiling;
  } catch (const std::exception& e) {
    err << "sercg: " << e.what() << "\n";
    return is_input_error(e) ? kInputError : kFailure;
  }
  return kFailure;
}

}  // namespace sercg::cli
