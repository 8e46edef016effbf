#include <gtest/gtest.h>

#include <random>

#include "sercg/analysis.hpp"
#include "test_util.hpp"

using namespace sercg;
using namespace sercg::analysis;
using fixtures_io::load;

namespace {

using EdgeSet = std::set<std::pair<std::string, std::string>>;

bool has(const EdgeSet& e, const std::string& a, const std::string& b) { return e.count({a, b}) > 0; }

std::unique_ptr<Solver> run_text(const sir::Program& p, const std::string& entry, Options o) {
  return analyze(p, {*sir::parse_method_signature(entry)}, o);
}

std::string model_text(const Solver& s, SerKind kind) {
  std::string out;
  for (const auto* m : s.models())
    if (m->kind == kind) out += sir::print_method(s.program(), m->body);
  return out;
}

std::size_t count(const std::string& hay, const std::string& needle) {
  std::size_t n = 0;
  for (auto p = hay.find(needle); p != std::string::npos; p = hay.find(needle, p + 1)) ++n;
  return n;
}

const char* kOneClass = R"(
class A implements Serializable {
  field String s;
  method void writeObject(ObjOut o) {
    L0:
      invoke o.defaultWriteObject() @a.wd;
      return;
  }
}
class Main {
  method static void main(String[] args) {
    L0:
      a = new A;
      p = const "f";
      f = new FileOut;
      invokespecial f FileOut.<init>(p) @m.f;
      o = new ObjOut;
      invokespecial o ObjOut.<init>(f) @m.o;
      invoke o.writeObject(a) @m.w;
      return;
  }
}
)";

const char* kTwoReads = R"(
class G implements Serializable {
  method void readObject(ObjIn s) {
    L0:
      return;
  }
}
class Main {
  method static void main(String[] args) {
    L0:
      p = const "f";
      f = new FileIn;
      invokespecial f FileIn.<init>(p) @m.f;
      i = new ObjIn;
      invokespecial i ObjIn.<init>(f) @m.i;
      a = invoke i.readObject() @m.r1;
      b = invoke i.readObject() @m.r2;
      return;
  }
}
)";

// Taint flows through fields, containers, calls and returns.
const char* kTaint = R"(
class Box {
  field Object v;
}
class Id {
  method Object id(Object x) {
    L0:
      return x;
  }
}
class Main {
  field static Object g;
  method static void main(Object t) {
    L0:
      b = new Box;
      putfield b.v = t;
      u = getfield b.v;
      l = newlist;
      add l t;
      k = const 0;
      e = get l k;
      putstatic Main.g = t;
      sg = getstatic Main.g;
      i = new Id;
      r = invoke i.id(t) @m.id;
      c = cast Box t;
      z = new Box;
      w = getfield z.v;
      return;
  }
}
)";

const char* kSideEffect = R"(
interface Act {
  method void go();
}
class S1 implements Act, Serializable {
  method void go() {
    L0:
      return;
  }
}
class S2 implements Act, Serializable {
  method void go() {
    L0:
      return;
  }
}
class N implements Act {
  method void go() {
    L0:
      return;
  }
}
class Main {
  method static void main(Act a) {
    L0:
      invoke a.go() @m.go;
      return;
  }
}
)";

// Drops the context part of value and return keys: a tainted receiver moves
// callees to a different context.
std::set<std::string> collapse(const std::set<std::string>& entities) {
  std::set<std::string> out;
  for (auto e : entities) {
    if (e[0] == 'v' || e[0] == 'r') {
      auto at = e.find('@');
      auto end = e[0] == 'v' ? e.rfind(':') : e.size();
      e = e.substr(0, at) + e.substr(end);
    }
    out.insert(e);
  }
  return out;
}

sir::ValueId value_named(const sir::MethodDecl& m, const std::string& name) {
  for (sir::ValueId v = 0; v < m.values.size(); ++v)
    if (m.values[v].name == name) return v;
  throw std::runtime_error("no value " + name);
}

}  // namespace

TEST(Analysis, PolicyAndModeNames) {
  EXPECT_EQ(parse_policy("0-1cfa"), Policy::ZeroOneCFA);
  EXPECT_EQ(parse_policy("cha"), Policy::CHA);
  EXPECT_FALSE(parse_policy("2cfa"));
  EXPECT_EQ(parse_mode("seneca"), Mode::Seneca);
  EXPECT_EQ(parse_mode("downcast"), Mode::Downcast);
  EXPECT_FALSE(parse_mode("x"));
}

TEST(Analysis, InitWorklist) {
  auto l = load("shelter");
  Solver s(l.program, {});
  auto e = l.entrypoints;
  e.push_back(e.front());
  s.init_worklist(e);
  ASSERT_EQ(s.pending().size(), 1u);
  EXPECT_EQ(s.node_method_name(s.pending()[0]), "Shelter.main(String[])");
  EXPECT_EQ(s.node_context(0).kind, ContextKind::Global);

  Solver bad(l.program, {});
  EXPECT_THROW(bad.init_worklist({*sir::parse_method_signature("Shelter.nope()")}), UnknownEntrypoint);
}

TEST(Analysis, SelectContext) {
  Context global;
  auto c = select_context(Policy::OneCFA, global, "s1", false, true, std::nullopt);
  EXPECT_EQ(c.kind, ContextKind::CallString);
  EXPECT_EQ(c.sites, std::vector<std::string>{"s1"});
  c = select_context(Policy::ZeroOneCFA, global, "s1", false, false, ObjId{7});
  EXPECT_EQ(c.kind, ContextKind::AllocSite);
  EXPECT_EQ(c.object, 7u);
  EXPECT_EQ(select_context(Policy::ZeroOneCFA, global, "s1", false, true, std::nullopt).kind, ContextKind::Global);
  EXPECT_EQ(select_context(Policy::ZeroCFA, global, "s1", false, false, ObjId{1}).kind, ContextKind::Global);
  c = select_context(Policy::ZeroCFA, global, "r", true, false, std::nullopt);
  EXPECT_EQ(c.kind, ContextKind::OneCallsite);
  EXPECT_EQ(c.site, "r");
}

TEST(Analysis, Dispatch) {
  auto p = sir::parse_program(kSideEffect);
  hierarchy::Hierarchy h(p);
  auto names = [&](const std::vector<sir::MethodId>& ms) {
    std::set<std::string> out;
    for (auto m : ms) out.insert(p.method(m).owner);
    return out;
  };
  std::set<std::string, std::less<>> inst{"S1"};
  EXPECT_EQ(names(dispatch(h, Policy::CHA, {}, "Act", "go", 0, inst)), (std::set<std::string>{"N", "S1", "S2"}));
  EXPECT_EQ(names(dispatch(h, Policy::RTA, {}, "Act", "go", 0, inst)), (std::set<std::string>{"S1"}));
  std::vector<AbstractObject> pts{{"x", "S2", false}};
  EXPECT_EQ(names(dispatch(h, Policy::ZeroOneCFA, pts, "Act", "go", 0, inst)), (std::set<std::string>{"S2"}));
  EXPECT_TRUE(dispatch(h, Policy::ZeroCFA, {}, "Act", "go", 0, inst).empty());
}

TEST(Analysis, CacheChainPhaseOne) {
  auto l = load("cache_chain");
  Solver s(l.program, {Policy::ZeroOneCFA, Mode::Seneca});
  s.init_worklist(l.entrypoints);
  s.run_phase1();
  auto e = collapsed_edges(s);
  EXPECT_TRUE(has(e, "Main.main(String[])", "ObjIn.readObject()"));
  EXPECT_TRUE(has(e, "Main.main(String[])", "FileIn.<init>(String)"));
  EXPECT_FALSE(has(e, "ObjIn.readObject()", "Config.readObject(ObjIn)"));
  ASSERT_EQ(s.models().size(), 1u);
  EXPECT_EQ(s.ser_points().size(), 1u);
  auto body = model_text(s, SerKind::Deserialize);
  EXPECT_NE(body.find("new Object"), std::string::npos);
  EXPECT_EQ(count(body, "invokespecial"), 0u);
  EXPECT_FALSE(s.return_tainted(s.models()[0]->node));
}

TEST(Analysis, CacheChainRefined) {
  auto l = load("cache_chain");
  auto s = analyze(l.program, l.entrypoints, {Policy::ZeroOneCFA, Mode::Seneca});
  auto e = collapsed_edges(*s);
  EXPECT_TRUE(has(e, "ObjIn.readObject()", "Config.readObject(ObjIn)"));
  EXPECT_TRUE(has(e, "ObjIn.readObject()", "CacheManager.readObject(ObjIn)"));
  EXPECT_TRUE(has(e, "CacheManager.readObject(ObjIn)", "CommandTask.run()"));
  EXPECT_TRUE(has(e, "CommandTask.run()", "TaskExecutor.executeCmd(String)"));
  EXPECT_TRUE(has(e, "TaskExecutor.executeCmd(String)", "Sys.exec(String)"));
  auto body = model_text(*s, SerKind::Deserialize);
  EXPECT_NE(body.find("phi("), std::string::npos);
  EXPECT_NE(body.find("x_Config"), body.rfind("phi(") == std::string::npos ? 0 : std::string::npos);
  auto phi = body.substr(body.find("phi("));
  phi = phi.substr(0, phi.find('\n'));
  EXPECT_NE(phi.find("Config"), std::string::npos);
  EXPECT_NE(phi.find("CacheManager"), std::string::npos);
  EXPECT_GE(s->extra_rounds(), 1u);

  auto base = analyze(l.program, l.entrypoints, {Policy::ZeroOneCFA, Mode::Baseline});
  auto be = collapsed_edges(*base);
  EXPECT_FALSE(has(be, "ObjIn.readObject()", "CacheManager.readObject(ObjIn)"));
  EXPECT_FALSE(has(be, "CommandTask.run()", "TaskExecutor.executeCmd(String)"));
}

TEST(Analysis, OneModelPerSite) {
  auto p = sir::parse_program(kTwoReads);
  auto s = run_text(p, "Main.main(String[])", {});
  ASSERT_EQ(s->models().size(), 2u);
  std::set<std::string> sites;
  for (const auto* m : s->models()) sites.insert(m->site);
  EXPECT_EQ(sites, (std::set<std::string>{"m.r1", "m.r2"}));
  std::size_t calls = 0;
  for (const auto& e : s->edges())
    if (s->node_method_name(e.to) == "G.readObject(ObjIn)") ++calls;
  EXPECT_EQ(calls, 2u);
}

TEST(Analysis, TaintRules) {
  auto p = sir::parse_program(kTaint);
  Solver s(p, {Policy::ZeroOneCFA, Mode::Seneca});
  s.init_worklist({*sir::parse_method_signature("Main.main(Object)")});
  s.run_phase1();
  const auto& m = p.method(*p.lookup_method("Main", "main", 1));
  s.seed_value_taint(0, value_named(m, "t"));
  s.drain();
  for (auto name : {"t", "u", "l", "e", "sg", "r", "c"}) EXPECT_TRUE(s.value_tainted(0, value_named(m, name))) << name;
  for (auto name : {"b", "z", "w", "k"}) EXPECT_FALSE(s.value_tainted(0, value_named(m, name))) << name;
  EXPECT_TRUE(s.static_tainted("Main.g"));
  bool ret = false;
  for (NodeId n = 0; n < s.node_count(); ++n)
    if (s.node_method_name(n) == "Id.id(Object)") ret = s.return_tainted(n);
  EXPECT_TRUE(ret);
}

TEST(Analysis, SideEffectTargetsSerializableOnly) {
  auto p = sir::parse_program(kSideEffect);
  Solver s(p, {Policy::ZeroOneCFA, Mode::Seneca});
  s.init_worklist({*sir::parse_method_signature("Main.main(Act)")});
  s.run_phase1();
  EXPECT_TRUE(s.edges().empty());
  s.seed_value_taint(0, 0);
  s.drain();
  std::set<std::string> callees;
  for (auto i : s.side_effect_edges()) callees.insert(s.node_method_name(s.edges()[i].to));
  EXPECT_EQ(callees, (std::set<std::string>{"S1.go()", "S2.go()"}));
  for (auto i : s.side_effect_edges())
    EXPECT_EQ(s.node_context(s.edges()[i].to).kind, ContextKind::OneCallsite);
}

TEST(Analysis, SideEffectPostCheck) {
  // Every side-effect edge lands on a tainted_dispatch target of its site.
  auto l = load("cache_chain");
  auto s = analyze(l.program, l.entrypoints, {});
  ASSERT_FALSE(s->side_effect_edges().empty());
  for (auto i : s->side_effect_edges()) {
    const auto& e = s->edges()[i];
    EXPECT_TRUE(s->value_tainted(e.to, 0)) << s->node_method_name(e.to);
  }
}

TEST(Analysis, Idempotent) {
  for (auto dir : {"shelter", "cache_chain"}) {
    auto l = load(dir);
    auto s = analyze(l.program, l.entrypoints, {});
    auto before = s->edges();
    auto events = s->taint_events().size();
    EXPECT_FALSE(s->refine_round());
    EXPECT_EQ(s->edges(), before);
    EXPECT_EQ(s->taint_events().size(), events);
  }
}

TEST(Analysis, TaintMonotone) {
  // Seeding a superset of values never loses taint or edges.
  auto p = sir::parse_program(kTaint);
  const auto& m = p.method(*p.lookup_method("Main", "main", 1));
  std::mt19937 rng(7);
  for (int round = 0; round < 50; ++round) {
    std::vector<sir::ValueId> small, large;
    for (sir::ValueId v = 0; v < m.values.size(); ++v) {
      bool in_large = rng() % 2;
      if (in_large) large.push_back(v);
      if (in_large && rng() % 2) small.push_back(v);
    }
    auto solve = [&](const std::vector<sir::ValueId>& seeds) {
      auto s = std::make_unique<Solver>(p, Options{});
      s->init_worklist({*sir::parse_method_signature("Main.main(Object)")});
      s->run_phase1();
      for (auto v : seeds) s->seed_value_taint(0, v);
      s->drain();
      return s;
    };
    auto a = solve(small), b = solve(large);
    auto ta = collapse(a->tainted_entities()), tb = collapse(b->tainted_entities());
    EXPECT_TRUE(std::includes(tb.begin(), tb.end(), ta.begin(), ta.end()));
    auto ea = collapsed_edges(*a), eb = collapsed_edges(*b);
    EXPECT_TRUE(std::includes(eb.begin(), eb.end(), ea.begin(), ea.end()));
  }
}

TEST(Analysis, TaintNeverFlipsBack) {
  for (auto dir : {"shelter", "cache_chain"}) {
    for (auto pol : {Policy::ZeroCFA, Policy::ZeroOneCFA, Policy::OneCFA}) {
      auto l = load(dir);
      auto s = analyze(l.program, l.entrypoints, {pol, Mode::Seneca});
      auto live = s->tainted_entities();
      std::set<std::string> seen;
      for (const auto& e : s->taint_events()) {
        EXPECT_TRUE(seen.insert(e.entity).second) << "flipped twice: " << e.entity;
        EXPECT_TRUE(live.count(e.entity)) << "no longer tainted: " << e.entity;
      }
      EXPECT_EQ(seen, live);
    }
  }
}

TEST(Analysis, SerModelShelter) {
  auto l = load("shelter");
  auto s = analyze(l.program, l.entrypoints, {});
  auto e = collapsed_edges(*s);
  EXPECT_TRUE(has(e, "ObjOut.writeObject(Object)", "Cat.writeObject(ObjOut)"));
  EXPECT_TRUE(has(e, "ObjOut.writeObject(Object)", "Dog.writeReplace()"));
  EXPECT_TRUE(has(e, "ObjIn.readObject()", "Cat.readObject(ObjIn)"));
  EXPECT_TRUE(has(e, "ObjIn.readObject()", "Dog.readResolve()"));
  auto body = model_text(*s, SerKind::Serialize);
  EXPECT_NE(body.find("getfield"), std::string::npos);
  EXPECT_NE(body.find("= get "), std::string::npos);
}

TEST(Analysis, SerModelOneClass) {
  auto p = sir::parse_program(kOneClass);
  auto s = run_text(p, "Main.main(String[])", {});
  auto body = model_text(*s, SerKind::Serialize);
  EXPECT_EQ(count(body, " = cast "), 1u) << body;
  EXPECT_EQ(count(body, "invokespecial"), 1u) << body;
  EXPECT_EQ(count(body, "getfield"), 0u) << body;
  EXPECT_TRUE(has(collapsed_edges(*s), "ObjOut.writeObject(Object)", "A.writeObject(ObjOut)"));
}

TEST(Analysis, DeserModelBaselineEmpty) {
  auto l = load("cache_chain");
  auto s = analyze(l.program, l.entrypoints, {Policy::ZeroOneCFA, Mode::Baseline});
  EXPECT_EQ(count(model_text(*s, SerKind::Deserialize), "invokespecial"), 0u);
  EXPECT_EQ(s->extra_rounds(), 0u);
}

TEST(Analysis, DowncastMode) {
  auto l = load("cache_chain");
  auto s = analyze(l.program, l.entrypoints, {Policy::ZeroOneCFA, Mode::Downcast});
  auto e = collapsed_edges(*s);
  EXPECT_TRUE(has(e, "ObjIn.readObject()", "Config.readObject(ObjIn)"));
  EXPECT_FALSE(has(e, "ObjIn.readObject()", "CacheManager.readObject(ObjIn)"));
  EXPECT_FALSE(has(e, "TaskExecutor.executeCmd(String)", "Sys.exec(String)"));
}

TEST(Analysis, PoliciesAgreeOnCallbackChain) {
  auto l = load("cache_chain");
  for (auto p : {Policy::CHA, Policy::RTA, Policy::ZeroCFA, Policy::ZeroOneCFA, Policy::OneCFA}) {
    auto s = analyze(l.program, l.entrypoints, {p, Mode::Seneca});
    auto e = collapsed_edges(*s);
    EXPECT_TRUE(has(e, "CacheManager.readObject(ObjIn)", "CommandTask.run()")) << to_string(p);
    EXPECT_TRUE(has(e, "TaskExecutor.executeCmd(String)", "Sys.exec(String)")) << to_string(p);
  }
}

TEST(Analysis, VisitCeiling) {
  auto l = load("cache_chain");
  Options o;
  o.visit_ceiling = 2;
  EXPECT_THROW(analyze(l.program, l.entrypoints, o), IterationCeiling);
}

TEST(Analysis, ExportsCarrySchema) {
  auto l = load("cache_chain");
  auto s = analyze(l.program, l.entrypoints, {});
  auto j = to_json(*s);
  EXPECT_NE(j.find("\"schema\""), std::string::npos);
  EXPECT_NE(j.find("\"seneca\""), std::string::npos);
  EXPECT_NE(to_dot(*s).find("digraph"), std::string::npos);
}
