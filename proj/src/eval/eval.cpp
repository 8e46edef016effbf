#include <deque>
#include <sstream>

#include <json.hpp>

#include "sercg/eval.hpp"

namespace sercg::eval {

namespace {

const std::set<std::string, std::less<>> kProtocol = {"ObjOut.writeObject(Object)", "ObjIn.readObject()"};

std::map<std::string, sir::MethodId, std::less<>> index_methods(const sir::Program& p) {
  std::map<std::string, sir::MethodId, std::less<>> out;
  for (sir::MethodId m = 0; m < p.methods.size(); ++m) out.emplace(p.method(m).qualified(), m);
  return out;
}

const sir::MethodDecl& lookup(const sir::Program& p, const std::map<std::string, sir::MethodId, std::less<>>& idx,
                              const std::string& name) {
  auto it = idx.find(name);
  if (it == idx.end()) throw ProgramMismatch("method " + name + " is not in the program");
  return p.method(it->second);
}

std::string trim(std::string s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.pop_back();
  std::size_t i = 0;
  while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
  return s.substr(i);
}

}  // namespace

std::string_view to_string(Category c) {
  switch (c) {
    case Category::AppApp: return "app->app";
    case Category::AppLib: return "app->lib";
    case Category::LibApp: return "lib->app";
    case Category::LibLib: return "lib->lib";
  }
  return "?";
}

EdgeSet static_edges(const analysis::Solver& solver) { return analysis::collapsed_edges(solver); }

EdgeSet dynamic_edges(const oracle::DynamicCallGraph& dcg) {
  EdgeSet out;
  for (const auto& [e, n] : dcg.edges) out.insert(e);
  return out;
}

EdgeSet apply_filter(const sir::Program& p, const EdgeSet& edges, const Filter& f) {
  auto idx = index_methods(p);
  EdgeSet out;
  for (const auto& e : edges) {
    const auto& from = lookup(p, idx, e.first);
    const auto& to = lookup(p, idx, e.second);
    if (f.drop_clinit && (from.name == sir::names::kClinit || to.name == sir::names::kClinit)) continue;
    if (f.drop_intrinsic && from.is_intrinsic && to.is_intrinsic) continue;
    auto sf = p.scope_of(from.owner), st = p.scope_of(to.owner);
    if (f.drop_excluded && (sf == sir::Scope::Excluded || st == sir::Scope::Excluded)) continue;
    if (f.drop_lib_lib && sf == sir::Scope::Library && st == sir::Scope::Library) continue;
    out.insert(e);
  }
  return out;
}

Category category(const sir::Program& p, const Edge& e) {
  auto owner = [](const std::string& q) { return q.substr(0, q.rfind('.', q.find('('))); };
  bool a = p.scope_of(owner(e.first)) == sir::Scope::Application;
  bool b = p.scope_of(owner(e.second)) == sir::Scope::Application;
  return a ? (b ? Category::AppApp : Category::AppLib) : (b ? Category::LibApp : Category::LibLib);
}

std::map<Category, std::size_t> categorize(const sir::Program& p, const EdgeSet& edges) {
  std::map<Category, std::size_t> out;
  for (const auto& e : edges) ++out[category(p, e)];
  return out;
}

EdgeSet missing_edges(const sir::Program& p, const EdgeSet& stat, const EdgeSet& dyn, const Filter& f) {
  auto s = apply_filter(p, stat, f);
  EdgeSet out;
  for (const auto& e : apply_filter(p, dyn, f))
    if (!s.count(e)) out.insert(e);
  return out;
}

EdgeSet spurious_edges(const sir::Program& p, const EdgeSet& stat, const EdgeSet& dyn, const Filter& f) {
  return missing_edges(p, dyn, stat, f);
}

EdgeSet serialization_reachable(const EdgeSet& graph, const std::vector<std::string>& roots) {
  std::map<std::string, std::vector<std::string>> succ;
  for (const auto& [a, b] : graph) succ[a].push_back(b);
  std::set<std::string> r0(roots.begin(), roots.end());
  std::deque<std::string> work(roots.begin(), roots.end());
  while (!work.empty()) {
    auto m = work.front();
    work.pop_front();
    if (kProtocol.count(m)) continue;
    for (const auto& n : succ[m])
      if (r0.insert(n).second) work.push_back(n);
  }
  EdgeSet out;
  for (const auto& e : graph)
    if (kProtocol.count(e.first) || !r0.count(e.first)) out.insert(e);
  return out;
}

std::vector<Annotation> parse_annotations(std::string_view text) {
  std::vector<Annotation> out;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    auto first = line.find(',');
    auto last = line.rfind(',');
    if (first == std::string::npos || first == last) throw MalformedAnnotation(n, "expected three fields");
    Annotation a;
    a.site = trim(line.substr(0, first));
    a.callee = trim(line.substr(first + 1, last - first - 1));
    auto pol = trim(line.substr(last + 1));
    if (pol == "must-reach") a.polarity = Polarity::MustReach;
    else if (pol == "must-not-reach") a.polarity = Polarity::MustNotReach;
    else throw MalformedAnnotation(n, "unknown polarity '" + pol + "'");
    if (a.site.empty() || a.callee.empty()) throw MalformedAnnotation(n, "empty field");
    out.push_back(std::move(a));
  }
  return out;
}

std::vector<Verdict> check_annotations(const analysis::Solver& solver, const std::vector<Annotation>& annotations) {
  const auto& p = solver.program();
  std::set<std::string, std::less<>> sites;
  for (const auto& m : p.methods)
    for (const auto& b : m.blocks)
      for (const auto& i : b.instrs)
        if (auto s = sir::site_of(i); !s.empty()) sites.emplace(s);
  std::vector<Verdict> out;
  for (const auto& a : annotations) {
    if (!sites.count(a.site)) throw UnknownAnnotationTarget("unknown site " + a.site);
    auto sig = sir::parse_method_signature(a.callee);
    if (!sig || !p.resolve_signature(*sig)) throw UnknownAnnotationTarget("unknown callee " + a.callee);
    bool reached = false;
    std::set<analysis::NodeId> via_models;
    for (const auto& e : solver.edges()) {
      if (e.site != a.site) continue;
      if (solver.node_method_name(e.to) == a.callee) reached = true;
      if (solver.is_model_node(e.to)) via_models.insert(e.to);
    }
    for (const auto& e : solver.edges())
      if (via_models.count(e.from) && solver.node_method_name(e.to) == a.callee) reached = true;
    Verdict v{a, reached, a.polarity == Polarity::MustReach ? reached : !reached};
    out.push_back(std::move(v));
  }
  return out;
}

FixtureReport compare(const std::string& name, const analysis::Solver& solver, const oracle::DynamicCallGraph* dcg,
                      const std::vector<std::string>& roots, const std::vector<Annotation>& annotations,
                      const Filter& filter) {
  const auto& p = solver.program();
  FixtureReport r;
  r.name = name;
  r.policy = std::string(analysis::to_string(solver.options().policy));
  r.mode = std::string(analysis::to_string(solver.options().mode));
  auto stat = static_edges(solver);
  r.static_edge_count = apply_filter(p, stat, filter).size();
  if (dcg) {
    auto dyn = dynamic_edges(*dcg);
    r.dynamic_edge_count = apply_filter(p, dyn, filter).size();
    r.missing = missing_edges(p, stat, dyn, filter);
    r.spurious = spurious_edges(p, stat, dyn, filter);
    auto ser = serialization_reachable(dyn, roots);
    for (const auto& e : r.missing)
      if (ser.count(e)) r.missing_serialization.insert(e);
    r.missing_by_category = categorize(p, r.missing);
    r.spurious_by_category = categorize(p, r.spurious);
  }
  r.verdicts = check_annotations(solver, annotations);
  return r;
}

std::string reports_to_json(const std::vector<FixtureReport>& reports) {
  using nlohmann::ordered_json;
  auto edges = [](const EdgeSet& s) {
    ordered_json a = ordered_json::array();
    for (const auto& [x, y] : s) a.push_back({x, y});
    return a;
  };
  auto cats = [](const std::map<Category, std::size_t>& m) {
    ordered_json o = ordered_json::object();
    for (auto c : {Category::AppApp, Category::AppLib, Category::LibApp, Category::LibLib}) {
      auto it = m.find(c);
      o[std::string(to_string(c))] = it == m.end() ? 0 : it->second;
    }
    return o;
  };
  ordered_json list = ordered_json::array();
  for (const auto& r : reports) {
    ordered_json verdicts = ordered_json::array();
    for (const auto& v : r.verdicts)
      verdicts.push_back({{"site", v.annotation.site},
                          {"callee", v.annotation.callee},
                          {"polarity", v.annotation.polarity == Polarity::MustReach ? "must-reach" : "must-not-reach"},
                          {"pass", v.pass}});
    list.push_back({{"fixture", r.name},
                    {"policy", r.policy},
                    {"mode", r.mode},
                    {"static_edges", r.static_edge_count},
                    {"dynamic_edges", r.dynamic_edge_count},
                    {"missing", edges(r.missing)},
                    {"missing_serialization", edges(r.missing_serialization)},
                    {"spurious", edges(r.spurious)},
                    {"missing_by_category", cats(r.missing_by_category)},
                    {"spurious_by_category", cats(r.spurious_by_category)},
                    {"annotations", verdicts}});
  }
  ordered_json out{{"schema", "sercg.eval/1"}, {"fixtures", list}};
  return out.dump(2) + "\n";
}

std::string reports_to_table(const std::vector<FixtureReport>& reports) {
  std::ostringstream os;
  os << "fixture\tpolicy\tmode\tmissing\tmissing_ser\tspurious\tapp->app\tapp->lib\tlib->app\tlib->lib\tannotations\n";
  for (const auto& r : reports) {
    auto cat = [&](Category c) {
      auto it = r.missing_by_category.find(c);
      return it == r.missing_by_category.end() ? 0 : it->second;
    };
    std::size_t pass = 0;
    for (const auto& v : r.verdicts) pass += v.pass;
    os << r.name << '\t' << r.policy << '\t' << r.mode << '\t' << r.missing.size() << '\t'
       << r.missing_serialization.size() << '\t' << r.spurious.size() << '\t' << cat(Category::AppApp) << '\t'
       << cat(Category::AppLib) << '\t' << cat(Category::LibApp) << '\t' << cat(Category::LibLib) << '\t' << pass
       << '/' << r.verdicts.size() << '\n';
  }
  return os.str();
}

}  // namespace sercg::eval
