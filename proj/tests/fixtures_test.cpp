#include <gtest/gtest.h>

#include <algorithm>

#include "sercg/eval.hpp"
#include "sercg/fixtures.hpp"
#include "sercg/vuln.hpp"
#include "test_util.hpp"

using namespace sercg;
using namespace sercg::fixtures;
using analysis::Mode;
using analysis::Policy;

namespace {

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string l;
  while (std::getline(in, l))
    if (!l.empty() && l[0] != '#') out.push_back(l);
  return out;
}

struct Base {
  std::string source;
  std::vector<std::string> gadgets;
};

Base base(const std::string& name) {
  return {fixtures_io::fixture("battery/" + name + "/base.sir"),
          lines(fixtures_io::fixture("battery/" + name + "/gadgets.csv"))};
}

std::vector<FixtureCase> battery() {
  std::vector<FixtureCase> all;
  for (auto n : {"services", "records"}) {
    auto b = base(n);
    for (auto& c : generate_battery(b.source, b.gadgets)) all.push_back(std::move(c));
  }
  return all;
}

oracle::Result run_case(const sir::Program& p, const FixtureCase& c) {
  oracle::Options o;
  if (!c.payload.empty()) o.preload.push_back(oracle::form_from_json(c.payload));
  o.mismatch = c.mismatch;
  return oracle::interpret(p, sir::parse_entrypoints(c.entrypoints).at(0), c.argv, o);
}

bool subset(const eval::EdgeSet& a, const eval::EdgeSet& b) {
  return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

}  // namespace

TEST(Fixtures, CaseCounts) {
  auto b = base("services");
  EXPECT_TRUE(generate_battery(b.source, {}).empty());
  EXPECT_EQ(generate_battery(b.source, {"Account"}).size(), 5u);
  auto three = generate_battery(b.source, {"Account", "Registry", "Holder"});
  ASSERT_EQ(three.size(), 15u);
  for (const auto& c : three) EXPECT_TRUE(check_case(c).empty()) << c.name;
  EXPECT_EQ(three[1].name, "account-list");
  EXPECT_THROW(generate_battery(b.source, {"Circle"}), NoCallbacks);
  EXPECT_THROW(generate_battery(b.source, {"Nope"}), sir::UnknownClass);
}

TEST(Fixtures, CallbackClasses) {
  auto p = sir::parse_program(base("services").source);
  auto cls = callback_classes(p);
  EXPECT_NE(std::find(cls.begin(), cls.end(), "Account"), cls.end());
  EXPECT_NE(std::find(cls.begin(), cls.end(), "SessionProxy"), cls.end());
  EXPECT_EQ(std::find(cls.begin(), cls.end(), "Archive"), cls.end());
  EXPECT_EQ(std::find(cls.begin(), cls.end(), "Circle"), cls.end());
}

TEST(Fixtures, BatteryValidatesAndRunsCleanly) {
  auto all = battery();
  ASSERT_GE(all.size(), 40u);
  std::set<std::string> names;
  for (const auto& c : all) {
    EXPECT_TRUE(names.insert(c.name).second) << c.name;
    auto problems = check_case(c);
    EXPECT_TRUE(problems.empty()) << c.name << ": " << (problems.empty() ? "" : problems[0]);
    auto p = sir::parse_program(c.source);
    auto r = run_case(p, c);
    EXPECT_FALSE(r.error) << c.name << ": " << r.error_message;
    for (const auto& cb : c.expected_callbacks) {
      bool hit = false;
      for (const auto& [e, n] : r.dcg.edges) hit |= e.second == cb;
      EXPECT_TRUE(hit) << c.name << " never ran " << cb;
    }
  }
}

TEST(Fixtures, EveryDeclaredCallbackExecutes) {
  for (auto n : {"services", "records"}) {
    auto b = base(n);
    auto p = sir::parse_program(b.source);
    std::set<std::string> declared, executed;
    for (const auto& cls : callback_classes(p))
      for (auto m : p.class_named(cls)->methods) {
        const auto& md = p.method(m);
        for (auto cb : {"writeObject", "writeReplace", "readObject", "readResolve", "validateObject",
                        "readObjectNoData"})
          if (md.name == cb) declared.insert(md.qualified());
      }
    for (const auto& c : generate_battery(b.source, b.gadgets)) {
      auto r = run_case(sir::parse_program(c.source), c);
      for (const auto& [e, k] : r.dcg.edges) executed.insert(e.second);
    }
    for (const auto& d : declared) EXPECT_TRUE(executed.count(d)) << n << ": " << d;
  }
}

TEST(Fixtures, BatterySoundAgainstOracle) {
  for (const auto& c : battery()) {
    auto p = sir::parse_program(c.source);
    auto eps = sir::parse_entrypoints(c.entrypoints);
    auto r = run_case(p, c);
    std::vector<std::string> roots;
    for (const auto& e : eps) roots.push_back(e.str());
    auto annotations = eval::parse_annotations(c.annotations);
    for (auto pol : {Policy::ZeroOneCFA, Policy::OneCFA}) {
      auto seneca = analysis::analyze(p, eps, {pol, Mode::Seneca});
      auto baseline = analysis::analyze(p, eps, {pol, Mode::Baseline});
      auto rs = eval::compare(c.name, *seneca, &r.dcg, roots, annotations);
      auto rb = eval::compare(c.name, *baseline, &r.dcg, roots, annotations);
      EXPECT_TRUE(rs.missing_serialization.empty())
          << c.name << " misses " << rs.missing_serialization.begin()->first << " -> "
          << rs.missing_serialization.begin()->second;
      EXPECT_TRUE(subset(rs.missing, rb.missing)) << c.name;
      for (const auto& v : rs.verdicts) EXPECT_TRUE(v.pass) << c.name << " " << v.annotation.callee;
      EXPECT_LE(seneca->extra_rounds(), 10u) << c.name;
    }
  }
}

TEST(Fixtures, SenecaTighterThanChaAndSpuriousConfined) {
  for (const auto& c : battery()) {
    auto p = sir::parse_program(c.source);
    auto eps = sir::parse_entrypoints(c.entrypoints);
    auto r = run_case(p, c);
    auto seneca = analysis::analyze(p, eps, {Policy::ZeroOneCFA, Mode::Seneca});
    auto cha = analysis::analyze(p, eps, {Policy::CHA, Mode::Seneca});
    auto se = eval::static_edges(*seneca);
    EXPECT_LT(se.size(), eval::static_edges(*cha).size()) << c.name;
    std::vector<std::string> roots;
    for (const auto& e : eps) roots.push_back(e.str());
    auto spurious = eval::spurious_edges(p, se, eval::dynamic_edges(r.dcg), {});
    auto confined = eval::serialization_reachable(se, roots);
    for (const auto& e : spurious) EXPECT_TRUE(confined.count(e)) << c.name << ": " << e.first << " -> " << e.second;
  }
}

TEST(Fixtures, GeneratedChains) {
  auto sinks = vuln::load_sinks(vuln::default_sinks_csv()).sinks;
  for (auto [name, links, sink] : {std::tuple{"chain-a", 3, "Sys.exec(String)"},
                                   std::tuple{"chain-b", 2, "Sys.writeFile(String,String)"}}) {
    auto c = generate_chain(name, links, sink);
    ASSERT_TRUE(check_case(c).empty()) << check_case(c)[0];
    auto p = sir::parse_program(c.source);
    auto eps = sir::parse_entrypoints(c.entrypoints);
    auto r = run_case(p, c);
    EXPECT_EQ(r.error, oracle::ErrorKind::CastFailure) << r.error_message;
    bool sank = false;
    for (const auto& t : r.trace) sank |= t.rfind("sink ", 0) == 0;
    EXPECT_TRUE(sank);
    auto seneca = analysis::analyze(p, eps, {Policy::ZeroOneCFA, Mode::Seneca});
    auto found = vuln::find_vulnerable_paths(*seneca, sinks);
    ASSERT_FALSE(found.paths.empty()) << name;
    // The executed chain is one of the reported paths.
    bool realized = false;
    for (const auto& path : found.paths) {
      if (path.nodes.size() != static_cast<std::size_t>(links) + 4) continue;
      bool all = true;
      for (std::size_t i = 0; i + 1 < path.nodes.size(); ++i)
        all &= r.dcg.has(seneca->node_method_name(path.nodes[i]), seneca->node_method_name(path.nodes[i + 1]));
      realized |= all;
    }
    EXPECT_TRUE(realized) << name;
    EXPECT_FALSE(found.truncated) << name;
    auto down = analysis::analyze(p, eps, {Policy::ZeroOneCFA, Mode::Downcast});
    EXPECT_TRUE(vuln::find_vulnerable_paths(*down, sinks).paths.empty()) << name;
  }
  EXPECT_THROW(generate_chain("x", 1, "Sys.print(Object)x"), std::invalid_argument);
  EXPECT_THROW(generate_chain("x", 1, "Main.run(String)"), std::invalid_argument);
}

TEST(Fixtures, WriteCase) {
  auto c = generate_chain("chain-w", 2, "Sys.exec(String)");
  auto dir = std::filesystem::temp_directory_path() / "sercg_write_case";
  std::filesystem::remove_all(dir);
  write_case(c, dir);
  EXPECT_EQ(fixtures_io::read_text((dir / "program.sir").string()), c.source);
  EXPECT_TRUE(std::filesystem::exists(dir / "payload.json"));
  EXPECT_EQ(fixtures_io::read_text((dir / "argv.txt").string()), c.argv[0] + "\n");
  std::filesystem::remove_all(dir);
}
