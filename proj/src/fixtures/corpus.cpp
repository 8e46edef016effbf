#include <fstream>
#include <sstream>

#include <json.hpp>

#include "sercg/corpus.hpp"

namespace sercg::corpus {

namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + p.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::vector<std::string> arg_lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string l;
  while (std::getline(in, l)) {
    if (!l.empty() && l.back() == '\r') l.pop_back();
    if (!l.empty()) out.push_back(l);
  }
  return out;
}

std::vector<oracle::SerializedForm> parse_payloads(const std::string& text) {
  auto j = nlohmann::json::parse(text, nullptr, false);
  if (j.is_discarded()) throw std::invalid_argument("payload is not JSON");
  std::vector<oracle::SerializedForm> out;
  if (j.is_array())
    for (const auto& e : j) out.push_back(oracle::form_from_json(e.dump()));
  else
    out.push_back(oracle::form_from_json(text));
  return out;
}

bool mismatch_flag(const std::string& expected) {
  for (const auto& l : arg_lines(expected))
    if (l == "# mismatch") return true;
  return false;
}

}  // namespace

Fixture load(const fs::path& dir) {
  Fixture f;
  f.name = dir.filename().string();
  f.program = sir::parse_program(slurp(dir / "program.sir"));
  if (fs::exists(dir / "scope.csv")) sir::apply_scope_file(f.program, slurp(dir / "scope.csv"));
  f.entrypoints = sir::parse_entrypoints(slurp(dir / "entrypoints.csv"));
  if (fs::exists(dir / "annotations.csv")) f.annotations = eval::parse_annotations(slurp(dir / "annotations.csv"));
  if (fs::exists(dir / "payload.json")) f.payloads = parse_payloads(slurp(dir / "payload.json"));
  if (fs::exists(dir / "argv.txt")) f.argv = arg_lines(slurp(dir / "argv.txt"));
  if (fs::exists(dir / "expected.csv")) f.mismatch = mismatch_flag(slurp(dir / "expected.csv"));
  return f;
}

Fixture from_case(const fixtures::FixtureCase& c) {
  Fixture f;
  f.name = c.name;
  f.program = sir::parse_program(c.source);
  f.entrypoints = sir::parse_entrypoints(c.entrypoints);
  f.annotations = eval::parse_annotations(c.annotations);
  if (!c.payload.empty()) f.payloads = parse_payloads(c.payload);
  f.argv = c.argv;
  f.mismatch = c.mismatch;
  return f;
}

std::vector<fs::path> discover(const fs::path& root) {
  if (fs::exists(root / "program.sir")) return {root};
  std::vector<fs::path> out;
  if (!fs::is_directory(root)) return out;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_directory() && fs::exists(e.path() / "program.sir")) out.push_back(e.path());
  std::sort(out.begin(), out.end());
  return out;
}

Outcome evaluate(const Fixture& f, const analysis::Options& options, const eval::Filter& filter) {
  Outcome o;
  oracle::Options oo;
  oo.preload = f.payloads;
  oo.mismatch = f.mismatch;
  bool ran = !f.entrypoints.empty();
  if (ran) o.run = oracle::interpret(f.program, f.entrypoints.front(), f.argv, oo);
  auto solver = analysis::analyze(f.program, f.entrypoints, options);
  std::vector<std::string> roots;
  for (const auto& e : f.entrypoints) roots.push_back(e.str());
  o.report = eval::compare(f.name, *solver, ran ? &o.run.dcg : nullptr, roots, f.annotations, filter);
  o.extra_rounds = solver->extra_rounds();
  o.static_edges = eval::static_edges(*solver).size();
  return o;
}

}  // namespace sercg::corpus
