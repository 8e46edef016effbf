// Checks the acceptance criteria end to end; one PASS/FAIL line each.

#include <algorithm>
#include <chrono>
#include <functional>
#include <iostream>
#include <random>

#include "random_hierarchy.hpp"
#include "sercg/corpus.hpp"
#include "sercg/vuln.hpp"
#include "test_util.hpp"

using namespace sercg;
using analysis::Mode;
using analysis::Policy;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

fs::path root() { return SERCG_FIXTURE_DIR; }

bool all_pass(const std::vector<eval::Verdict>& vs) {
  if (vs.empty()) return false;
  for (const auto& v : vs)
    if (!v.pass) return false;
  return true;
}

std::vector<std::string> roots_of(const corpus::Fixture& f) {
  std::vector<std::string> out;
  for (const auto& e : f.entrypoints) out.push_back(e.str());
  return out;
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);)
    if (!l.empty() && l[0] != '#') out.push_back(l);
  return out;
}

std::vector<corpus::Fixture> battery() {
  std::vector<corpus::Fixture> out;
  for (auto base : {"services", "records"}) {
    auto dir = root() / "battery" / base;
    auto src = fixtures_io::read_text((dir / "base.sir").string());
    for (const auto& c : fixtures::generate_battery(src, lines(fixtures_io::read_text((dir / "gadgets.csv").string()))))
      out.push_back(corpus::from_case(c));
  }
  return out;
}

std::vector<fixtures::FixtureCase> chains() {
  return {fixtures::generate_chain("chain-a", 3, "Sys.exec(String)"),
          fixtures::generate_chain("chain-b", 2, "Sys.writeFile(String,String)")};
}

struct Check {
  bool ok = true;
  std::string detail;
  void fail(const std::string& why) {
    if (ok) detail = why;
    ok = false;
  }
};

Check ser_suite() {
  Check c;
  auto t = Clock::now();
  int seneca = 0, base01 = 0, base1 = 0, n = 0;
  for (int i = 1; i <= 9; ++i) {
    auto f = corpus::load(root() / "cats" / ("ser" + std::to_string(i)));
    ++n;
    auto verdicts = [&](Policy p, Mode m) {
      auto s = analysis::analyze(f.program, f.entrypoints, {p, m});
      return eval::check_annotations(*s, f.annotations);
    };
    seneca += all_pass(verdicts(Policy::ZeroOneCFA, Mode::Seneca));
    base01 += all_pass(verdicts(Policy::ZeroOneCFA, Mode::Baseline));
    base1 += all_pass(verdicts(Policy::OneCFA, Mode::Baseline));
  }
  double secs = seconds_since(t);
  if (seneca != 9 || base01 != 0 || base1 != 0) c.fail("counts differ");
  if (secs >= 10) c.fail("too slow");
  c.detail = "seneca " + std::to_string(seneca) + "/" + std::to_string(n) + ", baseline 0-1cfa " +
             std::to_string(base01) + "/9, baseline 1cfa " + std::to_string(base1) + "/9, " +
             std::to_string(secs).substr(0, 5) + "s" + (c.ok ? "" : " (" + c.detail + ")");
  return c;
}

Check cache_chain() {
  Check c;
  auto f = corpus::load(root() / "cache_chain");
  auto s = analysis::analyze(f.program, f.entrypoints, {Policy::ZeroOneCFA, Mode::Seneca});
  auto e = analysis::collapsed_edges(*s);
  for (auto [a, b] : {std::pair{"ObjIn.readObject()", "Config.readObject(ObjIn)"},
                      std::pair{"ObjIn.readObject()", "CacheManager.readObject(ObjIn)"},
                      std::pair{"CacheManager.readObject(ObjIn)", "CommandTask.run()"},
                      std::pair{"CommandTask.run()", "TaskExecutor.executeCmd(String)"},
                      std::pair{"TaskExecutor.executeCmd(String)", "Sys.exec(String)"}})
    if (!e.count({a, b})) c.fail(std::string("missing ") + a + " -> " + b);
  std::set<std::string> sites;
  for (const auto& x : s->edges())
    if (s->node_method_name(x.from) == "CacheManager.readObject(ObjIn)" && s->node_method_name(x.to) == "CommandTask.run()")
      sites.insert(x.site);
  if (sites != std::set<std::string>{"s32run", "s46", "s68", "s68run", "s79"}) c.fail("run() not reached at every tainted site");
  bool phi = false;
  for (const auto* m : s->models()) {
    if (m->kind != analysis::SerKind::Deserialize) continue;
    auto body = sir::print_method(s->program(), m->body);
    for (auto p = body.find("phi("); p != std::string::npos; p = body.find("phi(", p + 1)) {
      auto line = body.substr(p, body.find('\n', p) - p);
      phi |= line.find("Config") != std::string::npos && line.find("CacheManager") != std::string::npos;
    }
  }
  if (!phi) c.fail("no return phi over Config and CacheManager");
  if (c.ok) c.detail = "5 edges, run() at 5 tainted sites, return phi present";
  return c;
}

Check soundness(const std::vector<corpus::Fixture>& bat) {
  Check c;
  std::size_t ser_missing = 0, extra_over = 0;
  for (const auto& f : bat) {
    for (auto pol : {Policy::ZeroOneCFA, Policy::OneCFA}) {
      auto s = corpus::evaluate(f, {pol, Mode::Seneca});
      auto b = corpus::evaluate(f, {pol, Mode::Baseline});
      if (s.run.error) c.fail(f.name + ": oracle error");
      ser_missing += s.report.missing_serialization.size();
      if (!std::includes(b.report.missing.begin(), b.report.missing.end(), s.report.missing.begin(),
                         s.report.missing.end()))
        c.fail(f.name + ": seneca misses an edge baseline finds");
      extra_over += !all_pass(s.report.verdicts);
    }
  }
  if (bat.size() < 40) c.fail("fewer than 40 fixtures");
  if (ser_missing) c.fail(std::to_string(ser_missing) + " serialization edges missed");
  if (extra_over) c.fail(std::to_string(extra_over) + " annotation failures");
  if (c.ok) c.detail = std::to_string(bat.size()) + " fixtures, 0 serialization edges missed, missing(seneca) within missing(baseline)";
  return c;
}

Check precision(const std::vector<corpus::Fixture>& bat) {
  Check c;
  std::size_t seneca_total = 0, cha_total = 0;
  for (const auto& f : bat) {
    auto s = analysis::analyze(f.program, f.entrypoints, {Policy::ZeroOneCFA, Mode::Seneca});
    auto h = analysis::analyze(f.program, f.entrypoints, {Policy::CHA, Mode::Seneca});
    auto se = eval::static_edges(*s), he = eval::static_edges(*h);
    seneca_total += se.size();
    cha_total += he.size();
    if (se.size() >= he.size()) c.fail(f.name + ": not smaller than CHA");
    oracle::Options o;
    o.preload = f.payloads;
    auto run = oracle::interpret(f.program, f.entrypoints.front(), f.argv, o);
    auto spurious = eval::spurious_edges(f.program, se, eval::dynamic_edges(run.dcg), {});
    auto confined = eval::serialization_reachable(se, roots_of(f));
    for (const auto& e : spurious)
      if (!confined.count(e)) c.fail(f.name + ": spurious " + e.first + " -> " + e.second);
  }
  if (c.ok)
    c.detail = "edges seneca " + std::to_string(seneca_total) + " < CHA " + std::to_string(cha_total) +
               ", spurious edges all inside serialization subgraphs";
  return c;
}

Check vulnerable_paths() {
  Check c;
  auto sinks = vuln::load_sinks(fixtures_io::read_text((root() / "gadget" / "sinks.csv").string())).sinks;
  std::vector<corpus::Fixture> fs{corpus::load(root() / "gadget")};
  for (const auto& ch : chains()) fs.push_back(corpus::from_case(ch));
  std::string counts;
  for (const auto& f : fs) {
    auto s = analysis::analyze(f.program, f.entrypoints, {Policy::ZeroOneCFA, Mode::Seneca});
    auto d = analysis::analyze(f.program, f.entrypoints, {Policy::ZeroOneCFA, Mode::Downcast});
    auto sp = vuln::find_vulnerable_paths(*s, sinks, 15);
    auto dp = vuln::find_vulnerable_paths(*d, sinks, 15);
    if (sp.paths.empty()) c.fail(f.name + ": seneca found no path");
    if (!dp.paths.empty()) c.fail(f.name + ": downcast found a path");
    counts += (counts.empty() ? "" : ", ") + f.name + " " + std::to_string(sp.paths.size()) + "/" +
              std::to_string(dp.paths.size());
  }
  c.detail = (c.ok ? "" : c.detail + "; ") + "seneca/downcast paths: " + counts;
  return c;
}

Check exploit_before_cast() {
  Check c;
  auto f = corpus::load(root() / "gadget");
  oracle::Options o;
  o.preload = f.payloads;
  auto r = oracle::interpret(f.program, f.entrypoints.front(), f.argv, o);
  std::vector<std::string> want = {
      "call ObjIn.readObject() -> CacheManager.readObject(ObjIn)",
      "call CacheManager.readObject(ObjIn) -> ObjIn.defaultReadObject()",
      "call ObjIn.readObject() -> Object.<init>()",
      "call CacheManager.readObject(ObjIn) -> Task.run()",
      "call Task.run() -> Sys.exec(String)",
      "sink Sys.exec(calc)",
      "cast CacheManager to Shelter in Server.main(String[])",
      "error CastFailure",
  };
  if (r.error != oracle::ErrorKind::CastFailure) c.fail("run did not end in CastFailure");
  if (!r.dcg.has("Task.run()", "Sys.exec(String)")) c.fail("Sys.exec not in the DCG");
  if (r.trace.size() < want.size() || !std::equal(want.begin(), want.end(), r.trace.end() - want.size()))
    c.fail("trace tail differs");
  if (c.ok) c.detail = "Sys.exec(calc) executed, then CastFailure";
  return c;
}

Check overhead(const std::vector<corpus::Fixture>& bat, Clock::time_point start) {
  Check c;
  std::vector<const corpus::Fixture*> all;
  std::vector<corpus::Fixture> bundled;
  for (const auto& d : corpus::discover(root()))
    if (d.filename() != "spin") bundled.push_back(corpus::load(d));
  for (const auto& ch : chains()) bundled.push_back(corpus::from_case(ch));
  for (const auto& f : bundled) all.push_back(&f);
  for (const auto& f : bat) all.push_back(&f);
  std::size_t worst = 0;
  for (const auto* f : all)
    for (auto pol : {Policy::CHA, Policy::RTA, Policy::ZeroCFA, Policy::ZeroOneCFA, Policy::OneCFA}) {
      auto s = analysis::analyze(f->program, f->entrypoints, {pol, Mode::Seneca});
      worst = std::max(worst, s->extra_rounds());
      if (s->extra_rounds() > 10) c.fail(f->name + ": " + std::to_string(s->extra_rounds()) + " extra rounds");
    }
  double secs = seconds_since(start);
  if (secs >= 60) c.fail("suite took " + std::to_string(secs) + "s");
  c.detail = (c.ok ? "" : c.detail + "; ") + "max extra rounds " + std::to_string(worst) + " over " +
             std::to_string(all.size()) + " fixtures x 5 policies, " + std::to_string(secs).substr(0, 5) + "s so far";
  return c;
}

Check properties(const std::vector<corpus::Fixture>& bat) {
  Check c;
  std::vector<const corpus::Fixture*> all;
  std::vector<corpus::Fixture> bundled;
  for (const auto& d : corpus::discover(root())) bundled.push_back(corpus::load(d));
  for (const auto& f : bundled) all.push_back(&f);
  for (const auto& f : bat) all.push_back(&f);
  std::size_t flips = 0;
  for (const auto* f : all) {
    if (f->entrypoints.empty()) continue;
    for (auto pol : {Policy::ZeroCFA, Policy::ZeroOneCFA, Policy::OneCFA}) {
      auto s = analysis::analyze(f->program, f->entrypoints, {pol, Mode::Seneca});
      // Monotonicity: every event names a distinct entity that is still tainted.
      auto live = s->tainted_entities();
      std::set<std::string> seen;
      for (const auto& e : s->taint_events())
        if (!seen.insert(e.entity).second || !live.count(e.entity)) ++flips;
      if (seen != live) ++flips;
      // Idempotence: one more refinement changes nothing.
      auto edges = s->edges();
      auto events = s->taint_events().size();
      if (s->refine_round() || s->edges() != edges || s->taint_events().size() != events)
        c.fail(f->name + ": fixpoint not idempotent");
    }
    auto text = sir::print_program(f->program);
    if (sir::print_program(sir::parse_program(text)) != text) c.fail(f->name + ": round-trip differs");
  }
  if (flips) c.fail(std::to_string(flips) + " taint flip events");

  std::mt19937 rng(2024);
  std::size_t checked = 0;
  for (int iter = 0; iter < 1000; ++iter) {
    auto rh = fixtures_io::random_hierarchy(rng);
    auto p = sir::parse_program(rh.source);
    hierarchy::Hierarchy h(p);
    fixtures_io::BruteDispatch brute{rh};
    auto names = [&](const std::vector<sir::MethodId>& ms) {
      std::set<std::string> out;
      for (auto m : ms) out.insert(p.method(m).owner + ".g");
      return out;
    };
    for (const auto& cls : rh.classes) {
      auto cha = names(h.cha_dispatch(cls.name, "g", 0));
      if (cha != brute.cha(cls.name)) c.fail("CHA dispatch disagrees with brute force");
      for (const auto& from : rh.classes) {
        auto t = names(h.tainted_dispatch(cls.name, "g", 0, from.name));
        if (t != brute.tainted(cls.name, from.name)) c.fail("tainted dispatch disagrees with brute force");
        if (!std::includes(cha.begin(), cha.end(), t.begin(), t.end())) c.fail("tainted dispatch outside CHA");
        ++checked;
      }
    }
  }
  if (c.ok)
    c.detail = "no flips, idempotent and round-trip on " + std::to_string(all.size()) +
               " fixtures; tainted within CHA on 1000 hierarchies (" + std::to_string(checked) + " queries)";
  return c;
}

}  // namespace

int main() {
  auto start = Clock::now();
  auto bat = battery();
  std::vector<std::pair<const char*, std::function<Check()>>> criteria = {
      {"ser-suite", ser_suite},
      {"cache-chain-edges", cache_chain},
      {"battery-soundness", [&] { return soundness(bat); }},
      {"precision-guard", [&] { return precision(bat); }},
      {"vulnerable-paths", vulnerable_paths},
      {"exploit-before-cast", exploit_before_cast},
      {"termination-overhead", [&] { return overhead(bat, start); }},
      {"properties", [&] { return properties(bat); }},
  };
  int failed = 0, i = 0;
  for (const auto& [name, run] : criteria) {
    Check c;
    try {
      c = run();
    } catch (const std::exception& e) {
      c.fail(std::string("exception: ") + e.what());
    }
    failed += !c.ok;
    std::cout << (c.ok ? "PASS" : "FAIL") << " " << ++i << " " << name << ": " << c.detail << "\n";
  }
  return failed ? 1 : 0;
}
