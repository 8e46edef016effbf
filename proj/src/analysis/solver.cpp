#include <algorithm>
#include <functional>

#include "sercg/analysis.hpp"

namespace sercg::analysis {

using sir::MethodId;
using sir::ValueId;
namespace names = sir::names;
namespace ins = sir::ins;

std::string_view to_string(Policy p) {
  switch (p) {
    case Policy::CHA: return "cha";
    case Policy::RTA: return "rta";
    case Policy::ZeroCFA: return "0cfa";
    case Policy::ZeroOneCFA: return "0-1cfa";
    case Policy::OneCFA: return "1cfa";
  }
  return "?";
}

std::string_view to_string(Mode m) {
  switch (m) {
    case Mode::Seneca: return "seneca";
    case Mode::Baseline: return "baseline";
    case Mode::Downcast: return "downcast";
  }
  return "?";
}

std::optional<Policy> parse_policy(std::string_view text) {
  for (auto p : {Policy::CHA, Policy::RTA, Policy::ZeroCFA, Policy::ZeroOneCFA, Policy::OneCFA})
    if (to_string(p) == text) return p;
  return std::nullopt;
}

std::optional<Mode> parse_mode(std::string_view text) {
  for (auto m : {Mode::Seneca, Mode::Baseline, Mode::Downcast})
    if (to_string(m) == text) return m;
  return std::nullopt;
}

Context select_context(Policy policy, const Context&, std::string_view site, bool callee_is_model,
                       bool callee_is_static, std::optional<ObjId> receiver) {
  Context c;
  if (callee_is_model) {
    c.kind = ContextKind::OneCallsite;
    c.site = std::string(site);
    return c;
  }
  switch (policy) {
    case Policy::OneCFA:
      c.kind = ContextKind::CallString;
      c.sites = {std::string(site)};
      break;
    case Policy::ZeroOneCFA:
      if (!callee_is_static && receiver) {
        c.kind = ContextKind::AllocSite;
        c.object = *receiver;
      }
      break;
    default:
      break;
  }
  return c;
}

std::vector<MethodId> dispatch(const hierarchy::Hierarchy& h, Policy policy,
                               const std::vector<AbstractObject>& pts, std::string_view static_type,
                               std::string_view name, std::size_t arity,
                               const std::set<std::string, std::less<>>& instantiated) {
  std::set<MethodId> out;
  if (policy == Policy::CHA || policy == Policy::RTA) {
    for (const auto& t : h.cha_targets(static_type, name, arity))
      if (policy == Policy::CHA || instantiated.count(t.receiver_class)) out.insert(t.method);
  } else {
    for (const auto& o : pts)
      if (h.program().find_class(o.type))
        if (auto m = h.implementation(o.type, name, arity)) out.insert(*m);
  }
  return {out.begin(), out.end()};
}

// ---------------------------------------------------------------------------

struct Solver::NodeState {
  MethodId method = sir::kInvalidId;
  ContextId ctx = 0;
  int model = -1;
  const sir::MethodDecl* body = nullptr;
  std::vector<std::vector<ObjId>> pts;
  std::vector<char> taint;
  std::vector<ObjId> ret_pts;
  bool ret_taint = false;
  std::set<NodeId> callers;

  void fit() {
    if (!body) return;
    if (pts.size() < body->values.size()) {
      pts.resize(body->values.size());
      taint.resize(body->values.size(), 0);
    }
  }
};

// Incremental construction state for one synthetic model.
struct Solver::ModelBuild {
  // Deserialization: groups of instructions, each ending in the value the
  // return phi receives (or kInvalidId for constructor-only groups).
  std::vector<std::vector<sir::Instruction>> groups;
  std::vector<ValueId> group_result;
  ValueId summary = sir::kInvalidId;
  ValueId cond = sir::kInvalidId;
  ValueId result = sir::kInvalidId;

  // Serialization: one phi and one cast per reached type.
  struct TypeGroup {
    std::string type;
    ValueId phi;
    ValueId cast;
  };
  std::vector<TypeGroup> types;
  std::vector<std::pair<ValueId, bool>> sources;  // value, is root
  std::vector<sir::Instruction> ser_body;
  std::vector<std::vector<std::pair<ValueId, sir::BlockId>>> phi_ops;
};

namespace {

bool merge(std::vector<ObjId>& dst, const std::vector<ObjId>& src) {
  if (&dst == &src || src.empty()) return false;
  std::size_t before = dst.size();
  std::vector<ObjId> out;
  out.reserve(dst.size() + src.size());
  std::set_union(dst.begin(), dst.end(), src.begin(), src.end(), std::back_inserter(out));
  if (out.size() == before) return false;
  dst = std::move(out);
  return true;
}

bool insert(std::vector<ObjId>& dst, ObjId o) {
  auto it = std::lower_bound(dst.begin(), dst.end(), o);
  if (it != dst.end() && *it == o) return false;
  dst.insert(it, o);
  return true;
}

const std::vector<ObjId> kEmpty;

std::string sanitize(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '.') out += '_';
    else if (c == '[') out += "_arr";
    else if (c == ']') continue;
    else out += c;
  }
  return out;
}

constexpr std::string_view kElems = "$elems";

}  // namespace

struct Solver::Impl {
  Solver& s;

  // --- interning -----------------------------------------------------------

  ObjId object(AbstractObject o) {
    auto it = s.object_index_.find(o);
    if (it != s.object_index_.end()) return it->second;
    auto id = static_cast<ObjId>(s.objects_.size());
    s.object_index_.emplace(o, id);
    s.objects_.push_back(std::move(o));
    return id;
  }

  ContextId context(const Context& c) {
    auto it = s.context_index_.find(c);
    if (it != s.context_index_.end()) return it->second;
    auto id = static_cast<ContextId>(s.contexts_.size());
    s.context_index_.emplace(c, id);
    s.contexts_.push_back(c);
    return id;
  }

  void enqueue(NodeId n) {
    if (n >= s.queued_.size()) s.queued_.resize(n + 1, false);
    if (s.queued_[n]) return;
    s.queued_[n] = true;
    s.worklist_.push_back(n);
  }

  NodeId node(MethodId m, ContextId c, int model = -1) {
    auto key = std::make_pair(m, c);
    auto it = s.node_index_.find(key);
    if (it != s.node_index_.end()) return it->second;
    auto id = static_cast<NodeId>(s.nodes_.size());
    auto ns = std::make_unique<NodeState>();
    ns->method = m;
    ns->ctx = c;
    ns->model = model;
    if (model >= 0) {
      ns->body = &s.models_[static_cast<std::size_t>(model)]->body;
    } else if (s.program_.method(m).has_body()) {
      ns->body = &s.program_.method(m);
    }
    ns->fit();
    s.nodes_.push_back(std::move(ns));
    s.node_index_.emplace(key, id);
    if (s.nodes_.back()->body) enqueue(id);
    return id;
  }

  // --- taint ---------------------------------------------------------------

  bool taint_value(NodeId n, ValueId v) {
    auto& ns = *s.nodes_[n];
    ns.fit();
    if (ns.taint[v]) return false;
    ns.taint[v] = 1;
    s.taint_events_.push_back({"v:" + s.node_key(n) + ":" + ns.body->values[v].name});
    return true;
  }

  void taint_field(ObjId o, const std::string& f) {
    auto& t = s.heap_taint_[{o, f}];
    if (t) return;
    t = true;
    s.taint_events_.push_back({"f:" + s.objects_[o].site + ":" + f});
    for (NodeId r : s.heap_readers_[{o, f}]) enqueue(r);
  }

  void taint_static(const std::string& key) {
    auto& t = s.static_taint_[key];
    if (t) return;
    t = true;
    s.taint_events_.push_back({"s:" + key});
    for (NodeId r : s.static_readers_[key]) enqueue(r);
  }

  void taint_return(NodeId n) {
    auto& ns = *s.nodes_[n];
    if (ns.ret_taint) return;
    ns.ret_taint = true;
    s.taint_events_.push_back({"r:" + s.node_key(n)});
    for (NodeId c : ns.callers) enqueue(c);
  }

  bool seneca() const { return s.options_.mode == Mode::Seneca; }

  // --- heap ----------------------------------------------------------------

  void heap_add(ObjId o, const std::string& f, const std::vector<ObjId>& src) {
    if (src.empty()) return;
    if (merge(s.heap_[{o, f}], src))
      for (NodeId r : s.heap_readers_[{o, f}]) enqueue(r);
  }

  // Reads o.f into dst on behalf of reader n; returns whether dst grew and
  // sets `tainted` if the field is tainted.
  bool heap_read(NodeId n, ObjId o, const std::string& f, std::vector<ObjId>& dst, bool& tainted) {
    std::pair<ObjId, std::string> key{o, f};
    s.heap_readers_[key].insert(n);
    if (auto t = s.heap_taint_.find(key); t != s.heap_taint_.end() && t->second) tainted = true;
    auto it = s.heap_.find(key);
    if (it == s.heap_.end()) return false;
    return merge(dst, it->second);
  }

  bool type_type_based() const {
    auto p = s.options_.policy;
    return p == Policy::ZeroCFA || p == Policy::CHA || p == Policy::RTA;
  }

  ObjId allocate(const NodeState& ns, std::size_t block, std::size_t index, const std::string& type,
                 ValueId dst) {
    if (s.instantiated_.insert(type).second) s.instantiated_grew_ = true;
    if (ns.model >= 0) {
      const auto& m = *s.models_[static_cast<std::size_t>(ns.model)];
      return object({"model:" + m.site + "/" + m.body.values[dst].name, type, true});
    }
    if (type_type_based()) return object({"type:" + type, type, false});
    const auto& body = *ns.body;
    return object({body.qualified() + "/" + body.blocks[block].label + "/" + std::to_string(index), type,
                   false});
  }

  bool cast_admits(const std::string& obj_type, const std::string& target) const {
    if (target == names::kObject || obj_type == target) return true;
    if (sir::is_array_type(target)) {
      if (!sir::is_array_type(obj_type)) return false;
      auto te = sir::element_type(target);
      auto oe = sir::element_type(obj_type);
      if (sir::is_primitive_type(te) || sir::is_primitive_type(oe)) return te == oe;
      return cast_admits(oe, te);
    }
    if (sir::is_array_type(obj_type)) return false;
    return s.hier_.is_subtype(obj_type, target);
  }

  // --- calls ---------------------------------------------------------------

  void add_edge(NodeId from, const std::string& site, NodeId to, bool side_effect) {
    Edge e{from, site, to};
    if (s.edge_set_.insert(e).second) {
      if (side_effect) s.side_effect_edges_.insert(s.edge_list_.size());
      s.edge_list_.push_back(e);
    }
    s.nodes_[to]->callers.insert(from);
  }

  // Moves arguments into callee k and the callee's return into dst. Returns
  // whether the caller's own state changed.
  bool call_flow(NodeId n, const std::string& site, NodeId k, const std::vector<ObjId>* this_objs,
                 bool this_taint, const std::vector<ValueId>& args, std::optional<ValueId> dst,
                 bool side_effect) {
    add_edge(n, site, k, side_effect);
    auto& caller = *s.nodes_[n];
    auto& callee = *s.nodes_[k];
    bool local = false;
    if (callee.body) {
      callee.fit();
      const auto& decl = *callee.body;
      bool changed = false;
      if (this_objs && !decl.is_static) {
        changed |= merge(callee.pts[0], *this_objs);
        if (this_taint) changed |= taint_value(k, 0);
      }
      for (std::size_t i = 0; i < args.size() && i < decl.params.size(); ++i) {
        ValueId p = decl.param_value(i);
        changed |= merge(callee.pts[p], caller.pts[args[i]]);
        if (caller.taint[args[i]]) changed |= taint_value(k, p);
      }
      if (changed) enqueue(k);
      if (dst) {
        local |= merge(caller.pts[*dst], callee.ret_pts);
        if (callee.ret_taint) local |= taint_value(n, *dst);
      }
    } else if (dst) {
      // Bodiless intrinsic: the result is as tainted as its inputs.
      bool t = this_taint;
      for (ValueId a : args) t = t || caller.taint[a];
      if (t) local |= taint_value(n, *dst);
    }
    return local;
  }

  std::optional<sir::MethodId> ser_point_target(const std::string& rtype, const std::string& name,
                                                std::size_t arity, SerKind& kind) const {
    if (rtype == names::kObjOut && name == names::kWriteObject && arity == 1) {
      kind = SerKind::Serialize;
    } else if (rtype == names::kObjIn && name == names::kReadObject && arity == 0) {
      kind = SerKind::Deserialize;
    } else {
      return std::nullopt;
    }
    return s.program_.lookup_method(rtype, name, arity);
  }

  std::size_t model_for(const std::string& site, SerKind kind, MethodId intrinsic) {
    if (auto it = s.model_by_site_.find(site); it != s.model_by_site_.end()) return it->second;
    auto idx = s.models_.size();
    auto m = std::make_unique<SyntheticModel>();
    m->kind = kind;
    m->site = site;
    const auto& decl = s.program_.method(intrinsic);
    m->body.owner = decl.owner;
    m->body.name = decl.name;
    m->body.params = decl.params;
    m->body.return_type = decl.return_type;
    m->body.values.push_back({"stream", decl.owner});
    for (const auto& p : decl.params) m->body.values.push_back({p.name, p.type});
    s.models_.push_back(std::move(m));
    s.builds_.push_back(std::make_unique<ModelBuild>());
    s.model_by_site_.emplace(site, idx);
    init_model(idx);
    Context c;
    c.kind = ContextKind::OneCallsite;
    c.site = site;
    s.models_[idx]->node = node(intrinsic, context(c), static_cast<int>(idx));
    return idx;
  }

  ValueId new_value(SyntheticModel& m, std::string name, std::string type) {
    auto id = static_cast<ValueId>(m.body.values.size());
    m.body.values.push_back({std::move(name) + std::to_string(id), std::move(type)});
    return id;
  }

  // Phase-1 shape: deserialization yields one untainted summary object.
  void init_model(std::size_t idx) {
    auto& m = *s.models_[idx];
    auto& b = *s.builds_[idx];
    if (m.kind == SerKind::Deserialize) {
      b.summary = new_value(m, "summary", std::string(names::kObject));
    }
    rebuild(idx);
  }

  void rebuild(std::size_t idx) {
    auto& m = *s.models_[idx];
    auto& b = *s.builds_[idx];
    auto& blocks = m.body.blocks;
    blocks.clear();
    auto block = [&](std::string label) -> sir::BasicBlock& {
      blocks.push_back({std::move(label), {}, {}});
      return blocks.back();
    };
    auto finish = [&] {
      for (auto& bb : blocks) bb.lines.assign(bb.instrs.size(), 0);
    };
    if (m.kind == SerKind::Deserialize) {
      if (b.groups.empty()) {
        auto& l0 = block("L0");
        l0.instrs.push_back(ins::New{b.summary, std::string(names::kObject)});
        l0.instrs.push_back(ins::Return{b.summary});
        finish();
        return;
      }
      if (b.cond == sir::kInvalidId) b.cond = new_value(m, "k", "bool");
      if (b.result == sir::kInvalidId) b.result = new_value(m, "r", std::string(names::kObject));
      const std::size_t n = b.groups.size();
      // L0, then G0, N0, G1, N1, ..., G(n-1), J.
      auto g_index = [&](std::size_t i) { return static_cast<sir::BlockId>(1 + 2 * i); };
      auto n_index = [&](std::size_t i) { return static_cast<sir::BlockId>(2 + 2 * i); };
      const auto j_index = static_cast<sir::BlockId>(2 * n);
      auto next_after = [&](std::size_t i) { return i + 1 < n ? n_index(i) : j_index; };
      auto& l0 = block("L0");
      l0.instrs.push_back(ins::New{b.summary, std::string(names::kObject)});
      l0.instrs.push_back(ins::Const{b.cond, sir::Literal{true}});
      l0.instrs.push_back(ins::Branch{b.cond, g_index(0), next_after(0)});
      for (std::size_t i = 0; i < n; ++i) {
        auto& g = block("G" + std::to_string(i));
        g.instrs = b.groups[i];
        g.instrs.push_back(ins::Goto{j_index});
        if (i + 1 < n) {
          auto& nb = block("N" + std::to_string(i));
          nb.instrs.push_back(ins::Branch{b.cond, g_index(i + 1), next_after(i + 1)});
        }
      }
      auto& j = block("J");
      ins::Phi phi{b.result, {}};
      sir::BlockId last_chain = n >= 2 ? n_index(n - 2) : 0;
      phi.operands.emplace_back(b.summary, last_chain);
      for (std::size_t i = 0; i < n; ++i)
        if (b.group_result[i] != sir::kInvalidId) phi.operands.emplace_back(b.group_result[i], g_index(i));
      j.instrs.push_back(std::move(phi));
      j.instrs.push_back(ins::Return{b.result});
      finish();
      return;
    }
    // Serialization.
    if (b.types.empty()) {
      block("L0").instrs.push_back(ins::Return{});
      finish();
      return;
    }
    if (b.cond == sir::kInvalidId) b.cond = new_value(m, "k", "bool");
    block("L0").instrs.push_back(ins::Goto{1});
    auto& h = block("H");
    for (std::size_t t = 0; t < b.types.size(); ++t) h.instrs.push_back(ins::Phi{b.types[t].phi, b.phi_ops[t]});
    h.instrs.push_back(ins::Goto{2});
    auto& body = block("B");
    body.instrs = b.ser_body;
    body.instrs.push_back(ins::Const{b.cond, sir::Literal{true}});
    body.instrs.push_back(ins::Branch{b.cond, 1, 3});
    block("X").instrs.push_back(ins::Return{});
    finish();
  }

  // --- instruction transfer -------------------------------------------------

  bool visit_instance_invoke(NodeId n, const ins::InstanceInvoke& i) {
    auto& ns = *s.nodes_[n];
    const auto& body = *ns.body;
    const std::string& rtype = body.values[i.receiver].type;
    bool local = false;
    bool rt = ns.taint[i.receiver] != 0;

    SerKind kind;
    if (auto intrinsic = ser_point_target(rtype, i.method, i.args.size(), kind)) {
      auto idx = model_for(i.site, kind, *intrinsic);
      NodeId k = s.models_[idx]->node;
      s.ser_points_.insert({i.site, kind, n, k});
      std::vector<ObjId> recv = ns.pts[i.receiver];
      return call_flow(n, i.site, k, &recv, rt, i.args, i.dst, false);
    }
    if (!s.program_.find_class(rtype)) return false;

    std::set<MethodId> side_methods;
    if (rt && seneca()) {
      for (const auto& t : s.hier_.tainted_targets(rtype, i.method, i.args.size(), body.owner)) {
        ObjId o = object({"side:" + i.site + ":" + t.receiver_class, t.receiver_class, true});
        local |= insert(ns.pts[i.receiver], o);
        side_methods.insert(t.method);
      }
    }

    std::map<MethodId, std::vector<ObjId>> groups;
    auto policy = s.options_.policy;
    if (policy == Policy::CHA || policy == Policy::RTA) {
      for (const auto& t : s.hier_.cha_targets(rtype, i.method, i.args.size()))
        if (policy == Policy::CHA || s.instantiated_.count(t.receiver_class)) groups[t.method];
    }
    std::vector<ObjId> recv = ns.pts[i.receiver];
    for (ObjId o : recv) {
      const auto& type = s.objects_[o].type;
      if (!s.program_.find_class(type)) continue;
      if (auto m = s.hier_.implementation(type, i.method, i.args.size())) groups[*m].push_back(o);
    }

    for (auto& [m, objs] : groups) {
      bool is_side = side_methods.count(m) > 0;
      if (rt) {
        Context c;
        c.kind = ContextKind::OneCallsite;
        c.site = i.site;
        NodeId k = node(m, context(c));
        local |= call_flow(n, i.site, k, &objs, true, i.args, i.dst, is_side);
      } else if (policy == Policy::ZeroOneCFA) {
        for (ObjId o : objs) {
          auto c = select_context(policy, s.contexts_[ns.ctx], i.site, false, false, o);
          NodeId k = node(m, context(c));
          std::vector<ObjId> one{o};
          local |= call_flow(n, i.site, k, &one, false, i.args, i.dst, false);
        }
      } else {
        auto c = select_context(policy, s.contexts_[ns.ctx], i.site, false, false, std::nullopt);
        NodeId k = node(m, context(c));
        local |= call_flow(n, i.site, k, &objs, false, i.args, i.dst, false);
      }
    }
    return local;
  }

  bool visit_special_invoke(NodeId n, const ins::SpecialInvoke& i) {
    auto& ns = *s.nodes_[n];
    if (!s.program_.find_class(i.owner)) return false;
    auto m = s.program_.lookup_method(i.owner, i.method, i.args.size());
    if (!m || s.program_.method(*m).is_abstract()) return false;
    bool rt = ns.taint[i.receiver] != 0;
    std::vector<ObjId> recv = ns.pts[i.receiver];
    bool local = false;
    auto policy = s.options_.policy;
    if (rt) {
      Context c;
      c.kind = ContextKind::OneCallsite;
      c.site = i.site;
      local |= call_flow(n, i.site, node(*m, context(c)), &recv, true, i.args, i.dst, false);
    } else if (policy == Policy::ZeroOneCFA) {
      for (ObjId o : recv) {
        auto c = select_context(policy, s.contexts_[ns.ctx], i.site, false, false, o);
        std::vector<ObjId> one{o};
        local |= call_flow(n, i.site, node(*m, context(c)), &one, false, i.args, i.dst, false);
      }
    } else {
      auto c = select_context(policy, s.contexts_[ns.ctx], i.site, false, false, std::nullopt);
      local |= call_flow(n, i.site, node(*m, context(c)), &recv, false, i.args, i.dst, false);
    }
    return local;
  }

  bool visit_static_invoke(NodeId n, const ins::StaticInvoke& i) {
    auto& ns = *s.nodes_[n];
    if (!s.program_.find_class(i.owner)) return false;
    auto m = s.program_.lookup_method(i.owner, i.method, i.args.size());
    if (!m) return false;
    auto c = select_context(s.options_.policy, s.contexts_[ns.ctx], i.site, false, true, std::nullopt);
    return call_flow(n, i.site, node(*m, context(c)), nullptr, false, i.args, i.dst, false);
  }

  bool visit_instr(NodeId n, std::size_t block, std::size_t index, const sir::Instruction& instr) {
    auto& ns = *s.nodes_[n];
    auto& pts = ns.pts;
    auto tainted = [&](ValueId v) { return ns.taint[v] != 0; };
    auto taint_if = [&](ValueId dst, bool cond) { return cond ? taint_value(n, dst) : false; };

    return std::visit(
        [&](const auto& i) -> bool {
          using T = std::decay_t<decltype(i)>;
          if constexpr (std::is_same_v<T, ins::New>) {
            return insert(pts[i.dst], allocate(ns, block, index, i.type, i.dst));
          } else if constexpr (std::is_same_v<T, ins::ArrayNew>) {
            return insert(pts[i.dst], allocate(ns, block, index, i.elem_type + "[]", i.dst));
          } else if constexpr (std::is_same_v<T, ins::ContainerNew>) {
            return insert(pts[i.dst], allocate(ns, block, index, std::string(sir::to_string(i.kind)), i.dst));
          } else if constexpr (std::is_same_v<T, ins::Const>) {
            return false;
          } else if constexpr (std::is_same_v<T, ins::LoadStatic>) {
            std::string key = i.owner + "." + i.field;
            s.static_readers_[key].insert(n);
            bool local = false;
            if (auto it = s.statics_.find(key); it != s.statics_.end()) local |= merge(pts[i.dst], it->second);
            if (auto it = s.static_taint_.find(key); it != s.static_taint_.end() && it->second)
              local |= taint_value(n, i.dst);
            return local;
          } else if constexpr (std::is_same_v<T, ins::StoreStatic>) {
            std::string key = i.owner + "." + i.field;
            if (!pts[i.src].empty() && merge(s.statics_[key], pts[i.src]))
              for (NodeId r : s.static_readers_[key]) enqueue(r);
            if (tainted(i.src)) taint_static(key);
            return false;
          } else if constexpr (std::is_same_v<T, ins::LoadInstance>) {
            bool local = false;
            bool ft = false;
            std::vector<ObjId> base = pts[i.base];
            for (ObjId o : base) local |= heap_read(n, o, i.field, pts[i.dst], ft);
            local |= taint_if(i.dst, tainted(i.base) || ft);
            return local;
          } else if constexpr (std::is_same_v<T, ins::StoreInstance>) {
            std::vector<ObjId> base = pts[i.base];
            for (ObjId o : base) {
              heap_add(o, i.field, pts[i.src]);
              if (tainted(i.src)) taint_field(o, i.field);
            }
            return false;
          } else if constexpr (std::is_same_v<T, ins::ArrayLoad> || std::is_same_v<T, ins::ContainerGet>) {
            ValueId c;
            if constexpr (std::is_same_v<T, ins::ArrayLoad>) c = i.array;
            else c = i.container;
            bool local = false;
            bool unused = false;
            std::vector<ObjId> base = pts[c];
            for (ObjId o : base) local |= heap_read(n, o, std::string(kElems), pts[i.dst], unused);
            local |= taint_if(i.dst, tainted(c));
            return local;
          } else if constexpr (std::is_same_v<T, ins::ArrayStore>) {
            std::vector<ObjId> base = pts[i.array];
            for (ObjId o : base) heap_add(o, std::string(kElems), pts[i.src]);
            return taint_if(i.array, tainted(i.src));
          } else if constexpr (std::is_same_v<T, ins::ContainerAdd>) {
            std::vector<ObjId> base = pts[i.container];
            for (ObjId o : base) heap_add(o, std::string(kElems), pts[i.value]);
            return taint_if(i.container, tainted(i.value));
          } else if constexpr (std::is_same_v<T, ins::ContainerPut>) {
            std::vector<ObjId> base = pts[i.container];
            for (ObjId o : base) {
              heap_add(o, std::string(kElems), pts[i.key]);
              heap_add(o, std::string(kElems), pts[i.value]);
            }
            return taint_if(i.container, tainted(i.key) || tainted(i.value));
          } else if constexpr (std::is_same_v<T, ins::Phi>) {
            bool local = false;
            for (const auto& [v, b] : i.operands) {
              local |= merge(pts[i.dst], pts[v]);
              local |= taint_if(i.dst, tainted(v));
            }
            return local;
          } else if constexpr (std::is_same_v<T, ins::CheckCast>) {
            bool local = false;
            std::vector<ObjId> src = pts[i.src];
            for (ObjId o : src)
              if (cast_admits(s.objects_[o].type, i.type)) local |= insert(pts[i.dst], o);
            local |= taint_if(i.dst, tainted(i.src));
            return local;
          } else if constexpr (std::is_same_v<T, ins::Return>) {
            if (i.value) {
              if (merge(ns.ret_pts, pts[*i.value]))
                for (NodeId c : ns.callers) enqueue(c);
              if (tainted(*i.value)) taint_return(n);
            }
            return false;
          } else if constexpr (std::is_same_v<T, ins::InstanceInvoke>) {
            return visit_instance_invoke(n, i);
          } else if constexpr (std::is_same_v<T, ins::SpecialInvoke>) {
            return visit_special_invoke(n, i);
          } else if constexpr (std::is_same_v<T, ins::StaticInvoke>) {
            return visit_static_invoke(n, i);
          } else {
            return false;
          }
        },
        instr);
  }

  void visit(NodeId n) {
    auto& ns = *s.nodes_[n];
    if (!ns.body) return;
    ns.fit();
    for (int guard = 0; guard < 64; ++guard) {
      bool local = false;
      const auto& blocks = ns.body->blocks;
      for (std::size_t b = 0; b < blocks.size(); ++b)
        for (std::size_t i = 0; i < blocks[b].instrs.size(); ++i)
          local |= visit_instr(n, b, i, blocks[b].instrs[i]);
      if (!local) return;
    }
    enqueue(n);
  }

  void drain() {
    while (!s.worklist_.empty()) {
      NodeId n = s.worklist_.front();
      s.worklist_.pop_front();
      s.queued_[n] = false;
      if (++s.visits_ > s.options_.visit_ceiling) throw IterationCeiling(s.options_.visit_ceiling);
      visit(n);
      if (s.instantiated_grew_) {
        s.instantiated_grew_ = false;
        if (s.options_.policy == Policy::RTA)
          for (NodeId k = 0; k < s.nodes_.size(); ++k)
            if (s.nodes_[k]->body) enqueue(k);
      }
    }
  }

  // --- deserialization models ----------------------------------------------

  std::vector<std::string> downcast_classes(const SyntheticModel& m) {
    std::set<std::string> casts;
    for (const auto& sp : s.ser_points_) {
      if (sp.site != m.site) continue;
      const auto* body = s.nodes_[sp.caller]->body;
      if (!body) continue;
      std::optional<ValueId> dst;
      for (const auto& bb : body->blocks)
        for (const auto& instr : bb.instrs)
          if (auto* inv = std::get_if<ins::InstanceInvoke>(&instr); inv && inv->site == m.site) dst = inv->dst;
      if (!dst) continue;
      for (const auto& bb : body->blocks)
        for (const auto& instr : bb.instrs)
          if (auto* c = std::get_if<ins::CheckCast>(&instr); c && c->src == *dst) casts.insert(c->type);
    }
    std::set<std::string> out;
    if (casts.empty()) {
      for (const auto& c : s.hier_.concrete_classes())
        if (s.program_.scope_of(c) == sir::Scope::Application && s.hier_.is_serializable(c) &&
            s.hier_.has_deser_callback(c))
          out.insert(c);
    } else {
      for (const auto& t : casts) {
        if (!s.program_.find_class(t)) continue;
        for (const auto& c : s.hier_.cone(t)) {
          const auto* d = s.program_.class_named(c);
          if (d && d->is_concrete() && s.hier_.is_serializable(c)) out.insert(c);
        }
      }
    }
    return {out.begin(), out.end()};
  }

  bool refine_deser(std::size_t idx) {
    auto& m = *s.models_[idx];
    auto& b = *s.builds_[idx];
    struct Plan {
      std::string cls;
      bool callbacks;
    };
    std::vector<Plan> plan;
    if (s.options_.mode == Mode::Downcast) {
      for (auto& c : downcast_classes(m)) plan.push_back({c, true});
    } else {
      for (const auto& c : s.hier_.concrete_classes()) {
        if (!s.hier_.is_serializable(c)) continue;
        if (s.hier_.has_deser_callback(c)) {
          plan.push_back({c, true});
          continue;
        }
        try {
          if (!s.program_.method(s.hier_.deser_constructor(c)).is_intrinsic) plan.push_back({c, false});
        } catch (const hierarchy::NoDefaultConstructor&) {
        }
      }
    }
    bool changed = false;
    for (const auto& p : plan) {
      std::string key = "class:" + p.cls;
      if (!m.keys.insert(key).second) continue;
      MethodId ctor;
      try {
        ctor = s.hier_.deser_constructor(p.cls);
      } catch (const hierarchy::NoDefaultConstructor&) {
        continue;
      }
      changed = true;
      std::vector<sir::Instruction> g;
      ValueId x = new_value(m, "x_" + sanitize(p.cls) + "_", p.cls);
      g.push_back(ins::New{x, p.cls});
      const auto& cd = s.program_.method(ctor);
      g.push_back(ins::SpecialInvoke{std::nullopt, m.site + "/" + p.cls + "/<init>", x, cd.owner,
                                     std::string(names::kInit), {}});
      ValueId result = p.callbacks ? x : sir::kInvalidId;
      if (p.callbacks) {
        auto call = [&](MethodId cb, std::vector<ValueId> args, bool returns) -> ValueId {
          const auto& d = s.program_.method(cb);
          std::optional<ValueId> dst;
          if (returns) dst = new_value(m, "rr_" + sanitize(p.cls) + "_", d.return_type);
          g.push_back(ins::SpecialInvoke{dst, m.site + "/" + p.cls + "/" + d.owner + "." + d.name, x, d.owner,
                                         d.name, std::move(args)});
          return dst ? *dst : sir::kInvalidId;
        };
        if (auto cb = s.hier_.callback(p.cls, names::kReadObject)) call(*cb, {0}, false);
        for (MethodId nd : s.hier_.no_data_callbacks(p.cls)) call(nd, {}, false);
        if (auto cb = s.hier_.callback(p.cls, names::kReadResolve)) result = call(*cb, {}, true);
        if (auto cb = s.hier_.callback(p.cls, names::kValidateObject)) call(*cb, {}, false);
      }
      b.groups.push_back(std::move(g));
      b.group_result.push_back(result);
      rebuild(idx);
      if (p.callbacks && seneca()) {
        NodeId k = m.node;
        s.nodes_[k]->fit();
        taint_value(k, x);
        ObjId o = object({"model:" + m.site + "/" + m.body.values[x].name, p.cls, true});
        for (const auto* f : s.program_.instance_fields(p.cls)) taint_field(o, f->name);
      }
    }
    if (changed) {
      rebuild(idx);
      s.nodes_[m.node]->fit();
      enqueue(m.node);
    }
    return changed;
  }

  // --- serialization models ------------------------------------------------

  std::vector<std::string> ser_fields(const std::string& type) const {
    std::vector<std::string> out;
    if (sir::is_array_type(type) || sir::is_container_type(type)) {
      out.emplace_back(kElems);
      return out;
    }
    if (!s.program_.find_class(type)) return out;
    for (const auto* f : s.program_.instance_fields(type))
      if (!f->is_transient && !sir::is_primitive_type(f->type)) out.push_back(f->name);
    return out;
  }

  // Objects whose serialization can reach a writeReplace/writeObject callback.
  std::vector<bool> leads_to_callback() const {
    std::vector<bool> leads(s.objects_.size(), false);
    for (ObjId o = 0; o < s.objects_.size(); ++o) {
      const auto& t = s.objects_[o].type;
      leads[o] = s.program_.find_class(t) && s.hier_.has_ser_callback(t);
    }
    for (bool changed = true; changed;) {
      changed = false;
      for (ObjId o = 0; o < s.objects_.size(); ++o) {
        if (leads[o]) continue;
        for (const auto& f : ser_fields(s.objects_[o].type)) {
          auto it = s.heap_.find({o, f});
          if (it == s.heap_.end()) continue;
          if (std::any_of(it->second.begin(), it->second.end(), [&](ObjId x) { return leads[x]; })) {
            leads[o] = changed = true;
            break;
          }
        }
      }
    }
    return leads;
  }

  bool refine_ser(std::size_t idx) {
    auto& m = *s.models_[idx];
    auto& b = *s.builds_[idx];
    NodeId k = m.node;
    if (b.sources.empty()) b.sources.emplace_back(1, true);
    bool any = false;
    for (int guard = 0; guard < 64; ++guard) {
      bool added = false;
      auto leads = leads_to_callback();
      auto& ns = *s.nodes_[k];
      ns.fit();
      // Route sources into per-type phis.
      for (std::size_t si = 0; si < b.sources.size(); ++si) {
        auto [src, root] = b.sources[si];
        ns.fit();
        std::vector<ObjId> objs = ns.pts[src];
        for (ObjId o : objs) {
          if (!root && (o >= leads.size() || !leads[o])) continue;
          std::size_t t = type_group(idx, s.objects_[o].type, added);
          std::string key = "op:" + std::to_string(t) + ":" + std::to_string(src);
          if (m.keys.insert(key).second) {
            b.phi_ops[t].emplace_back(src, src == 1 ? 0 : 2);
            added = true;
          }
        }
      }
      // Descend into fields, container contents and array elements.
      for (std::size_t t = 0; t < b.types.size(); ++t) {
        const auto group = b.types[t];
        std::vector<ObjId> objs = s.nodes_[k]->pts.size() > group.cast ? s.nodes_[k]->pts[group.cast]
                                                                        : std::vector<ObjId>{};
        for (const auto& f : ser_fields(group.type)) {
          std::string key = "field:" + group.type + "." + f;
          if (m.keys.count(key)) continue;
          bool needed = false;
          for (ObjId o : objs) {
            auto it = s.heap_.find({o, f});
            if (it != s.heap_.end() &&
                std::any_of(it->second.begin(), it->second.end(), [&](ObjId x) { return leads[x]; }))
              needed = true;
          }
          if (!needed) continue;
          m.keys.insert(key);
          added = true;
          ValueId v;
          if (f == kElems) {
            ValueId zero = new_value(m, "i", "int");
            b.ser_body.push_back(ins::Const{zero, sir::Literal{std::int64_t{0}}});
            v = new_value(m, "e_" + sanitize(group.type) + "_", std::string(names::kObject));
            if (sir::is_array_type(group.type)) {
              m.body.values[v].type = sir::element_type(group.type);
              b.ser_body.push_back(ins::ArrayLoad{v, group.cast, zero});
            } else {
              b.ser_body.push_back(ins::ContainerGet{v, group.cast, zero});
            }
          } else {
            const auto* fd = s.program_.lookup_field(group.type, f);
            v = new_value(m, "f_" + sanitize(group.type) + "_" + f + "_", fd ? fd->type : "Object");
            b.ser_body.push_back(ins::LoadInstance{v, group.cast, f});
          }
          b.sources.emplace_back(v, false);
        }
      }
      if (!added) break;
      any = true;
      rebuild(idx);
      s.nodes_[k]->fit();
      visit(k);
    }
    if (any) enqueue(k);
    return any;
  }

  std::size_t type_group(std::size_t idx, const std::string& type, bool& added) {
    auto& m = *s.models_[idx];
    auto& b = *s.builds_[idx];
    for (std::size_t t = 0; t < b.types.size(); ++t)
      if (b.types[t].type == type) return t;
    added = true;
    m.keys.insert("type:" + type);
    ValueId phi = new_value(m, "u_" + sanitize(type) + "_", std::string(names::kObject));
    ValueId cast = new_value(m, "c_" + sanitize(type) + "_", type);
    b.types.push_back({type, phi, cast});
    b.phi_ops.emplace_back();
    b.ser_body.push_back(ins::CheckCast{cast, type, phi});
    if (s.program_.find_class(type)) {
      if (auto wr = s.hier_.callback(type, names::kWriteReplace)) {
        const auto& d = s.program_.method(*wr);
        ValueId r = new_value(m, "w_" + sanitize(type) + "_", d.return_type);
        b.ser_body.push_back(ins::SpecialInvoke{r, m.site + "/" + type + "/" + d.owner + "." + d.name, cast,
                                                d.owner, d.name, {}});
        b.sources.emplace_back(r, false);
      }
      if (auto wo = s.hier_.callback(type, names::kWriteObject)) {
        const auto& d = s.program_.method(*wo);
        b.ser_body.push_back(ins::SpecialInvoke{std::nullopt, m.site + "/" + type + "/" + d.owner + "." + d.name,
                                                cast, d.owner, d.name, {0}});
      }
    }
    return b.types.size() - 1;
  }
};

// ---------------------------------------------------------------------------

Solver::Solver(const sir::Program& program, Options options)
    : program_(program), hier_(program), options_(options) {
  contexts_.push_back(Context{});
  context_index_.emplace(Context{}, 0);
}

Solver::~Solver() = default;

void Solver::init_worklist(const std::vector<sir::MethodSignature>& entrypoints) {
  Impl impl{*this};
  for (const auto& sig : entrypoints) {
    auto m = program_.resolve_signature(sig);
    if (!m || !program_.method(*m).has_body()) throw UnknownEntrypoint(sig.str());
    impl.node(*m, 0);
  }
}

std::vector<NodeId> Solver::pending() const { return {worklist_.begin(), worklist_.end()}; }

void Solver::run_phase1() {
  Impl impl{*this};
  // Class initializers run before anything else.
  for (const auto& cls : program_.classes)
    if (auto m = program_.declared_method(cls.name, names::kClinit, 0))
      if (program_.method(*m).is_static && program_.method(*m).has_body()) impl.node(*m, 0);
  impl.drain();
  phase1_edges_ = edge_list_.size();
}

bool Solver::refine_round() {
  Impl impl{*this};
  bool changed = false;
  for (std::size_t i = 0; i < models_.size(); ++i) {
    if (models_[i]->kind == SerKind::Deserialize) changed |= impl.refine_deser(i);
    else changed |= impl.refine_ser(i);
  }
  impl.drain();
  return changed;
}

std::size_t Solver::run_phase2() {
  std::size_t rounds = 0;
  while (refine_round()) ++rounds;
  extra_rounds_ = rounds;
  return rounds;
}

void Solver::run() {
  run_phase1();
  if (options_.mode != Mode::Baseline) run_phase2();
}

void Solver::drain() { Impl{*this}.drain(); }

void Solver::seed_value_taint(NodeId n, ValueId v) {
  Impl impl{*this};
  if (impl.taint_value(n, v)) impl.enqueue(n);
}

std::size_t Solver::node_count() const { return nodes_.size(); }
MethodId Solver::node_method(NodeId n) const { return nodes_.at(n)->method; }
const Context& Solver::node_context(NodeId n) const { return contexts_.at(nodes_.at(n)->ctx); }

std::optional<NodeId> Solver::find_node(MethodId m, const Context& c) const {
  auto ci = context_index_.find(c);
  if (ci == context_index_.end()) return std::nullopt;
  auto it = node_index_.find({m, ci->second});
  if (it == node_index_.end()) return std::nullopt;
  return it->second;
}

std::string Solver::node_method_name(NodeId n) const { return program_.method(node_method(n)).qualified(); }

std::string Solver::context_label(const Context& c) const {
  switch (c.kind) {
    case ContextKind::Global: return "global";
    case ContextKind::CallString: {
      std::string out = "cs:[";
      for (std::size_t i = 0; i < c.sites.size(); ++i) out += (i ? "," : "") + c.sites[i];
      return out + "]";
    }
    case ContextKind::AllocSite: return "obj:" + objects_.at(c.object).site;
    case ContextKind::OneCallsite: return "site:" + c.site;
  }
  return "?";
}

std::string Solver::node_key(NodeId n) const {
  return node_method_name(n) + "@" + context_label(contexts_[nodes_.at(n)->ctx]);
}

bool Solver::is_model_node(NodeId n) const { return nodes_.at(n)->model >= 0; }

const SyntheticModel* Solver::model_of(NodeId n) const {
  int m = nodes_.at(n)->model;
  return m < 0 ? nullptr : models_[static_cast<std::size_t>(m)].get();
}

std::vector<SerPoint> Solver::ser_points() const { return {ser_points_.begin(), ser_points_.end()}; }

std::vector<const SyntheticModel*> Solver::models() const {
  std::vector<const SyntheticModel*> out;
  for (const auto& m : models_) out.push_back(m.get());
  return out;
}

std::vector<ObjId> Solver::points_to(NodeId n, ValueId v) const {
  const auto& ns = *nodes_.at(n);
  return v < ns.pts.size() ? ns.pts[v] : kEmpty;
}

std::vector<ObjId> Solver::field_points_to(ObjId o, std::string_view field) const {
  auto it = heap_.find({o, std::string(field)});
  return it == heap_.end() ? kEmpty : it->second;
}

bool Solver::value_tainted(NodeId n, ValueId v) const {
  const auto& ns = *nodes_.at(n);
  return v < ns.taint.size() && ns.taint[v];
}

bool Solver::field_tainted(ObjId o, std::string_view field) const {
  auto it = heap_taint_.find({o, std::string(field)});
  return it != heap_taint_.end() && it->second;
}

bool Solver::static_tainted(std::string_view key) const {
  auto it = static_taint_.find(key);
  return it != static_taint_.end() && it->second;
}

bool Solver::return_tainted(NodeId n) const { return nodes_.at(n)->ret_taint; }

std::set<std::string> Solver::tainted_entities() const {
  // Keys are built from names so that separate runs can be compared.
  std::set<std::string> out;
  for (NodeId n = 0; n < nodes_.size(); ++n) {
    const auto& ns = *nodes_[n];
    std::string where = node_key(n);
    for (ValueId v = 0; v < ns.taint.size(); ++v)
      if (ns.taint[v]) out.insert("v:" + where + ":" + ns.body->values[v].name);
    if (ns.ret_taint) out.insert("r:" + where);
  }
  for (const auto& [k, t] : heap_taint_)
    if (t) out.insert("f:" + objects_[k.first].site + ":" + k.second);
  for (const auto& [k, t] : static_taint_)
    if (t) out.insert("s:" + k);
  return out;
}

std::unique_ptr<Solver> analyze(const sir::Program& program,
                                const std::vector<sir::MethodSignature>& entrypoints, Options options) {
  auto solver = std::make_unique<Solver>(program, options);
  solver->init_worklist(entrypoints);
  solver->run();
  return solver;
}

std::set<std::pair<std::string, std::string>> collapsed_edges(const Solver& solver) {
  std::set<std::pair<std::string, std::string>> out;
  for (const auto& e : solver.edges())
    out.emplace(solver.node_method_name(e.from), solver.node_method_name(e.to));
  return out;
}

}  // namespace sercg::analysis
