#include <algorithm>

#include "sercg/hierarchy.hpp"
#include "sercg/oracle.hpp"

namespace sercg::oracle {

namespace names = sir::names;
namespace ins = sir::ins;
using sir::MethodId;
using sir::ValueId;

std::string_view to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::StepBudgetExceeded: return "StepBudgetExceeded";
    case ErrorKind::NullDeref: return "NullDeref";
    case ErrorKind::CastFailure: return "CastFailure";
    case ErrorKind::MissingMain: return "MissingMain";
    case ErrorKind::NotSerializable: return "NotSerializable";
    case ErrorKind::MissingClass: return "MissingClass";
    case ErrorKind::IndexOutOfBounds: return "IndexOutOfBounds";
    case ErrorKind::EndOfStream: return "EndOfStream";
    case ErrorKind::AbstractCall: return "AbstractCall";
  }
  return "?";
}

namespace {

constexpr std::size_t kMaxDepth = 4000;

struct HeapRef {
  std::uint32_t id;
  bool operator==(const HeapRef&) const = default;
};

using Value = std::variant<std::monostate, std::int64_t, bool, std::string, HeapRef>;

enum class ObjKind { Object, Array, List, Set, Map };

struct HeapObj {
  ObjKind kind = ObjKind::Object;
  std::string type;  // class name; "T[]" for arrays; container name
  std::map<std::string, Value, std::less<>> fields;
  std::vector<Value> elems;  // maps: key, value, key, value, ...
  std::string channel;       // streams and files
  std::size_t cursor = 0;    // ObjIn: next form on the channel
};

std::string text_of(const Value& v, const std::vector<HeapObj>& heap) {
  return std::visit(
      [&](const auto& x) -> std::string {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, std::monostate>) return "null";
        else if constexpr (std::is_same_v<T, std::int64_t>) return std::to_string(x);
        else if constexpr (std::is_same_v<T, bool>) return x ? "true" : "false";
        else if constexpr (std::is_same_v<T, std::string>) return x;
        else return heap[x.id].type + "@" + std::to_string(x.id);
      },
      v);
}

bool truthy(const Value& v) {
  if (auto b = std::get_if<bool>(&v)) return *b;
  if (auto i = std::get_if<std::int64_t>(&v)) return *i != 0;
  return !std::holds_alternative<std::monostate>(v);
}

Value default_value(const std::string& type) {
  if (type == "int" || type == "long") return std::int64_t{0};
  if (type == "bool") return false;
  return std::monostate{};
}

struct WriteFrame {
  HeapRef obj;
  std::size_t record;
};

struct WriteSession {
  SerializedForm form;
  std::map<std::uint32_t, std::size_t> handles;
  std::vector<WriteFrame> stack;
};

struct ReadFrame {
  HeapRef obj;
  std::size_t record;
  std::size_t custom_cursor = 0;
};

struct ReadSession {
  SerializedForm form;
  std::vector<std::optional<Value>> materialized;
  std::vector<ReadFrame> stack;
  std::vector<HeapRef> validations;
};

class Interpreter {
 public:
  Interpreter(const sir::Program& p, const Options& o, Result& r) : p_(p), h_(p), opt_(o), res_(r) {
    for (const auto& f : o.preload) channels_[f.channel].push_back(f);
    auto w = p_.lookup_method(names::kObjOut, names::kWriteObject, 1);
    auto rd = p_.lookup_method(names::kObjIn, names::kReadObject, 0);
    writer_name_ = p_.method(*w).qualified();
    reader_name_ = p_.method(*rd).qualified();
  }

  void run(MethodId entry, const std::vector<std::string>& argv) {
    for (const auto& cls : p_.classes)
      if (auto m = p_.declared_method(cls.name, names::kClinit, 0))
        if (p_.method(*m).is_static && p_.method(*m).has_body()) execute(*m, std::nullopt, {});
    const auto& decl = p_.method(entry);
    std::vector<Value> args(decl.params.size());
    if (!args.empty() && decl.params[0].type == "String[]") {
      HeapRef a = alloc(ObjKind::Array, "String[]");
      for (const auto& s : argv) heap_[a.id].elems.push_back(s);
      args[0] = a;
    }
    execute(entry, std::nullopt, args);
  }

 private:
  const sir::Program& p_;
  hierarchy::Hierarchy h_;
  const Options& opt_;
  Result& res_;
  std::vector<HeapObj> heap_;
  std::map<std::string, Value, std::less<>> statics_;
  std::map<std::string, std::vector<SerializedForm>, std::less<>> channels_;
  std::map<std::uint32_t, WriteSession> writes_;
  std::map<std::uint32_t, ReadSession> reads_;
  std::string writer_name_, reader_name_;
  std::size_t depth_ = 0;

  [[noreturn]] void fail(ErrorKind k, const std::string& msg) { throw OracleError(k, msg); }

  void step() {
    if (++res_.steps > opt_.step_budget)
      fail(ErrorKind::StepBudgetExceeded, "step budget of " + std::to_string(opt_.step_budget) + " exceeded");
  }

  HeapRef alloc(ObjKind kind, std::string type) {
    HeapObj o;
    o.kind = kind;
    if (kind == ObjKind::Object && p_.find_class(type))
      for (const auto* f : p_.instance_fields(type)) o.fields[f->name] = default_value(f->type);
    o.type = std::move(type);
    heap_.push_back(std::move(o));
    return {static_cast<std::uint32_t>(heap_.size() - 1)};
  }

  HeapRef deref(const Value& v, const char* what) {
    if (auto r = std::get_if<HeapRef>(&v)) return *r;
    if (std::holds_alternative<std::monostate>(v)) fail(ErrorKind::NullDeref, std::string("null ") + what);
    fail(ErrorKind::NullDeref, std::string("non-object ") + what);
  }

  std::string runtime_type(const Value& v) const {
    return std::visit(
        [&](const auto& x) -> std::string {
          using T = std::decay_t<decltype(x)>;
          if constexpr (std::is_same_v<T, std::monostate>) return "null";
          else if constexpr (std::is_same_v<T, std::int64_t>) return "int";
          else if constexpr (std::is_same_v<T, bool>) return "bool";
          else if constexpr (std::is_same_v<T, std::string>) return "String";
          else return heap_[x.id].type;
        },
        v);
  }

  bool instance_of(const std::string& type, const std::string& target) const {
    if (target == names::kObject || type == target) return true;
    if ((type == "int" && target == "long") || (type == "long" && target == "int")) return true;
    if (sir::is_array_type(target)) {
      if (!sir::is_array_type(type)) return false;
      auto te = sir::element_type(target), oe = sir::element_type(type);
      if (sir::is_primitive_type(te) || sir::is_primitive_type(oe)) return te == oe;
      return instance_of(oe, te);
    }
    if (sir::is_array_type(type) || !p_.find_class(type) || !p_.find_class(target)) return false;
    return h_.is_subtype(type, target);
  }

  // --- calls ---------------------------------------------------------------

  Value call(const std::string& caller, MethodId m, std::optional<Value> self, std::vector<Value> args) {
    const auto& decl = p_.method(m);
    res_.dcg.hit(caller, decl.qualified());
    res_.trace.push_back("call " + caller + " -> " + decl.qualified());
    return execute(m, std::move(self), std::move(args));
  }

  Value execute(MethodId m, std::optional<Value> self, std::vector<Value> args) {
    const auto& decl = p_.method(m);
    if (decl.is_intrinsic) return intrinsic(decl, self ? *self : Value{}, args);
    if (!decl.has_body()) fail(ErrorKind::AbstractCall, "call of abstract " + decl.qualified());
    if (++depth_ > kMaxDepth) fail(ErrorKind::StepBudgetExceeded, "call depth exceeded");
    std::vector<Value> frame(decl.values.size());
    std::size_t base = 0;
    if (!decl.is_static) frame[base++] = self ? *self : Value{};
    for (std::size_t i = 0; i < args.size() && base + i < frame.size(); ++i) frame[base + i] = args[i];
    Value out = run_body(decl, frame);
    --depth_;
    return out;
  }

  Value run_body(const sir::MethodDecl& m, std::vector<Value>& f) {
    sir::BlockId cur = 0, prev = sir::kInvalidId;
    const std::string self = m.qualified();
    for (;;) {
      const auto& block = m.blocks.at(cur);
      std::vector<std::pair<ValueId, Value>> phis;
      std::size_t i = 0;
      for (; i < block.instrs.size(); ++i) {
        auto* phi = std::get_if<ins::Phi>(&block.instrs[i]);
        if (!phi) break;
        step();
        Value v;
        for (const auto& [val, pred] : phi->operands)
          if (pred == prev) v = f[val];
        phis.emplace_back(phi->dst, v);
      }
      for (auto& [d, v] : phis) f[d] = std::move(v);
      bool jumped = false;
      for (; i < block.instrs.size() && !jumped; ++i) {
        step();
        const auto& instr = block.instrs[i];
        if (auto* r = std::get_if<ins::Return>(&instr)) return r->value ? f[*r->value] : Value{};
        if (auto* b = std::get_if<ins::Branch>(&instr)) {
          prev = cur;
          cur = truthy(f[b->cond]) ? b->then_block : b->else_block;
          jumped = true;
        } else if (auto* g = std::get_if<ins::Goto>(&instr)) {
          prev = cur;
          cur = g->target;
          jumped = true;
        } else {
          exec(self, m, f, instr);
        }
      }
      if (!jumped) return Value{};
    }
  }

  void exec(const std::string& self, const sir::MethodDecl& m, std::vector<Value>& f,
            const sir::Instruction& instr) {
    std::visit(
        [&](const auto& i) {
          using T = std::decay_t<decltype(i)>;
          if constexpr (std::is_same_v<T, ins::New>) {
            if (!p_.find_class(i.type)) fail(ErrorKind::MissingClass, i.type);
            f[i.dst] = alloc(ObjKind::Object, i.type);
          } else if constexpr (std::is_same_v<T, ins::Const>) {
            f[i.dst] = std::visit([](const auto& x) -> Value { return x; }, i.value.value);
          } else if constexpr (std::is_same_v<T, ins::LoadStatic>) {
            auto it = statics_.find(i.owner + "." + i.field);
            f[i.dst] = it == statics_.end() ? Value{} : it->second;
          } else if constexpr (std::is_same_v<T, ins::StoreStatic>) {
            statics_[i.owner + "." + i.field] = f[i.src];
          } else if constexpr (std::is_same_v<T, ins::LoadInstance>) {
            auto& o = heap_[deref(f[i.base], "field read").id];
            auto it = o.fields.find(i.field);
            f[i.dst] = it == o.fields.end() ? Value{} : it->second;
          } else if constexpr (std::is_same_v<T, ins::StoreInstance>) {
            heap_[deref(f[i.base], "field write").id].fields[i.field] = f[i.src];
          } else if constexpr (std::is_same_v<T, ins::InstanceInvoke>) {
            HeapRef r = deref(f[i.receiver], "receiver");
            const auto& type = heap_[r.id].type;
            if (!p_.find_class(type)) fail(ErrorKind::MissingClass, "no methods on " + type);
            auto target = p_.lookup_method(type, i.method, i.args.size());
            if (!target) fail(ErrorKind::AbstractCall, type + " has no " + i.method);
            Value v = call(self, *target, f[i.receiver], gather(f, i.args));
            if (i.dst) f[*i.dst] = v;
          } else if constexpr (std::is_same_v<T, ins::SpecialInvoke>) {
            deref(f[i.receiver], "receiver");
            auto target = p_.lookup_method(i.owner, i.method, i.args.size());
            if (!target) fail(ErrorKind::AbstractCall, i.owner + " has no " + i.method);
            Value v = call(self, *target, f[i.receiver], gather(f, i.args));
            if (i.dst) f[*i.dst] = v;
          } else if constexpr (std::is_same_v<T, ins::StaticInvoke>) {
            auto target = p_.lookup_method(i.owner, i.method, i.args.size());
            if (!target) fail(ErrorKind::AbstractCall, i.owner + " has no " + i.method);
            Value v = call(self, *target, std::nullopt, gather(f, i.args));
            if (i.dst) f[*i.dst] = v;
          } else if constexpr (std::is_same_v<T, ins::CheckCast>) {
            const Value& v = f[i.src];
            if (!std::holds_alternative<std::monostate>(v) && !instance_of(runtime_type(v), i.type)) {
              res_.trace.push_back("cast " + runtime_type(v) + " to " + i.type + " in " + self);
              fail(ErrorKind::CastFailure, "cannot cast " + runtime_type(v) + " to " + i.type);
            }
            f[i.dst] = v;
          } else if constexpr (std::is_same_v<T, ins::ArrayNew>) {
            auto n = std::get_if<std::int64_t>(&f[i.length]);
            if (!n || *n < 0) fail(ErrorKind::IndexOutOfBounds, "bad array length");
            HeapRef a = alloc(ObjKind::Array, i.elem_type + "[]");
            heap_[a.id].elems.assign(static_cast<std::size_t>(*n), default_value(i.elem_type));
            f[i.dst] = a;
          } else if constexpr (std::is_same_v<T, ins::ArrayLoad>) {
            auto& o = heap_[deref(f[i.array], "array").id];
            f[i.dst] = o.elems[index(f[i.index], o.elems.size())];
          } else if constexpr (std::is_same_v<T, ins::ArrayStore>) {
            auto& o = heap_[deref(f[i.array], "array").id];
            o.elems[index(f[i.index], o.elems.size())] = f[i.src];
          } else if constexpr (std::is_same_v<T, ins::ContainerNew>) {
            auto kind = i.kind == sir::ContainerKind::List  ? ObjKind::List
                        : i.kind == sir::ContainerKind::Set ? ObjKind::Set
                                                            : ObjKind::Map;
            f[i.dst] = alloc(kind, std::string(sir::to_string(i.kind)));
          } else if constexpr (std::is_same_v<T, ins::ContainerAdd>) {
            auto& o = heap_[deref(f[i.container], "container").id];
            if (o.kind == ObjKind::Set && std::find(o.elems.begin(), o.elems.end(), f[i.value]) != o.elems.end())
              return;
            o.elems.push_back(f[i.value]);
          } else if constexpr (std::is_same_v<T, ins::ContainerPut>) {
            auto& o = heap_[deref(f[i.container], "container").id];
            for (std::size_t k = 0; k + 1 < o.elems.size(); k += 2)
              if (o.elems[k] == f[i.key]) {
                o.elems[k + 1] = f[i.value];
                return;
              }
            o.elems.push_back(f[i.key]);
            o.elems.push_back(f[i.value]);
          } else if constexpr (std::is_same_v<T, ins::ContainerGet>) {
            auto& o = heap_[deref(f[i.container], "container").id];
            if (o.kind == ObjKind::Map) {
              f[i.dst] = Value{};
              for (std::size_t k = 0; k + 1 < o.elems.size(); k += 2)
                if (o.elems[k] == f[i.key]) f[i.dst] = o.elems[k + 1];
            } else {
              f[i.dst] = o.elems[index(f[i.key], o.elems.size())];
            }
          }
        },
        instr);
    (void)m;
  }

  std::size_t index(const Value& v, std::size_t size) {
    auto n = std::get_if<std::int64_t>(&v);
    if (!n || *n < 0 || static_cast<std::size_t>(*n) >= size)
      fail(ErrorKind::IndexOutOfBounds, "index " + text_of(v, heap_) + " of " + std::to_string(size));
    return static_cast<std::size_t>(*n);
  }

  static std::vector<Value> gather(const std::vector<Value>& f, const std::vector<ValueId>& ids) {
    std::vector<Value> out;
    for (auto id : ids) out.push_back(f[id]);
    return out;
  }

  // --- intrinsics ----------------------------------------------------------

  Value intrinsic(const sir::MethodDecl& d, const Value& self, const std::vector<Value>& a) {
    const std::string q = d.owner + "." + d.name;
    if (d.name == names::kInit) {
      if (d.owner == "FileOut" || d.owner == "FileIn") {
        heap_[deref(self, "file").id].channel = text_of(a[0], heap_);
      } else if (d.owner == names::kObjOut || d.owner == names::kObjIn) {
        std::string ch;
        if (auto r = std::get_if<HeapRef>(&a[0])) ch = heap_[r->id].channel;
        else ch = text_of(a[0], heap_);
        heap_[deref(self, "stream").id].channel = ch;
      }
      return {};
    }
    if (q == "Sys.exec" || q == "Sys.writeFile" || q == "Sys.eval") {
      std::string args;
      for (std::size_t i = 0; i < a.size(); ++i) args += (i ? "," : "") + text_of(a[i], heap_);
      res_.trace.push_back("sink " + q + "(" + args + ")");
      return {};
    }
    if (q == "Sys.print") {
      res_.output.push_back(text_of(a[0], heap_));
      return {};
    }
    if (q == "Sys.eq") return a[0] == a[1];
    if (q == "Sys.concat") return text_of(a[0], heap_) + text_of(a[1], heap_);
    if (q == "Sys.isNull") return std::holds_alternative<std::monostate>(a[0]);
    if (q == "Sys.isEmpty") {
      auto s = std::get_if<std::string>(&a[0]);
      return !s || s->empty();
    }
    if (q == "Sys.not") return !truthy(a[0]);
    HeapRef stream = deref(self, "stream");
    if (d.owner == names::kObjOut && d.name == names::kWriteObject) return write_object(stream, a[0]);
    if (d.owner == names::kObjOut && d.name == names::kDefaultWriteObject) {
      auto it = writes_.find(stream.id);
      if (it != writes_.end() && !it->second.stack.empty()) {
        auto fr = it->second.stack.back();
        default_write(it->second, stream, fr.obj, fr.record);
      }
      return {};
    }
    if (d.owner == names::kObjIn && d.name == names::kReadObject) return read_object(stream);
    if (d.owner == names::kObjIn && d.name == names::kDefaultReadObject) {
      auto it = reads_.find(stream.id);
      if (it != reads_.end() && !it->second.stack.empty()) {
        auto fr = it->second.stack.back();
        default_read(it->second, stream, fr.obj, fr.record);
      }
      return {};
    }
    if (d.owner == names::kObjIn && d.name == names::kRegisterValidation) {
      auto it = reads_.find(stream.id);
      if (it != reads_.end()) it->second.validations.push_back(deref(a[0], "validator"));
      return {};
    }
    return {};
  }

  // --- serialization ---------------------------------------------------------

  Value write_object(HeapRef stream, const Value& v) {
    auto& sess = writes_[stream.id];
    if (!sess.stack.empty()) {
      FormValue fv = write_value(sess, stream, v);
      sess.form.records[sess.stack.back().record].custom.push_back(fv);
      return {};
    }
    sess = WriteSession{};
    sess.form.channel = heap_[stream.id].channel;
    sess.form.root = write_value(sess, stream, v);
    channels_[sess.form.channel].push_back(sess.form);
    res_.written.push_back(sess.form);
    writes_.erase(stream.id);
    return {};
  }

  FormValue write_value(WriteSession& s, HeapRef stream, Value v) {
    if (auto i = std::get_if<std::int64_t>(&v)) return *i;
    if (auto b = std::get_if<bool>(&v)) return *b;
    if (auto str = std::get_if<std::string>(&v)) return *str;
    if (std::holds_alternative<std::monostate>(v)) return std::monostate{};
    HeapRef orig = std::get<HeapRef>(v);
    if (auto it = s.handles.find(orig.id); it != s.handles.end()) return RecordRef{it->second};
    HeapRef obj = orig;
    if (heap_[obj.id].kind == ObjKind::Object) {
      const std::string type = heap_[obj.id].type;
      if (!h_.is_serializable(type)) fail(ErrorKind::NotSerializable, type);
      if (auto wr = h_.callback(type, names::kWriteReplace)) {
        Value r = call(writer_name_, *wr, obj, {});
        auto ref = std::get_if<HeapRef>(&r);
        if (!ref) return write_value(s, stream, r);
        if (ref->id != obj.id) {
          if (auto it = s.handles.find(ref->id); it != s.handles.end()) {
            s.handles[orig.id] = it->second;
            return RecordRef{it->second};
          }
          obj = *ref;
          if (heap_[obj.id].kind == ObjKind::Object && !h_.is_serializable(heap_[obj.id].type))
            fail(ErrorKind::NotSerializable, heap_[obj.id].type);
        }
      }
    }
    const std::size_t id = s.form.records.size();
    s.form.records.emplace_back();
    s.handles[orig.id] = id;
    s.handles[obj.id] = id;
    const HeapObj& o = heap_[obj.id];
    Record& rec = s.form.records[id];
    switch (o.kind) {
      case ObjKind::Object: rec.kind = RecordKind::Object; rec.type = o.type; break;
      case ObjKind::Array: rec.kind = RecordKind::Array; rec.type = sir::element_type(o.type); break;
      case ObjKind::List: rec.kind = RecordKind::List; break;
      case ObjKind::Set: rec.kind = RecordKind::Set; break;
      case ObjKind::Map: rec.kind = RecordKind::Map; break;
    }
    if (o.kind != ObjKind::Object) {
      std::vector<Value> elems = o.elems;
      for (const auto& e : elems) {
        FormValue fv = write_value(s, stream, e);
        s.form.records[id].elems.push_back(std::move(fv));
      }
      return RecordRef{id};
    }
    if (auto wo = h_.callback(o.type, names::kWriteObject)) {
      s.stack.push_back({obj, id});
      call(writer_name_, *wo, obj, {stream});
      s.stack.pop_back();
    } else {
      default_write(s, stream, obj, id);
    }
    return RecordRef{id};
  }

  void default_write(WriteSession& s, HeapRef stream, HeapRef obj, std::size_t record) {
    const std::string type = heap_[obj.id].type;
    for (const auto* f : p_.instance_fields(type)) {
      if (f->is_transient) continue;
      Value v = heap_[obj.id].fields[f->name];
      FormValue fv = write_value(s, stream, v);
      s.form.records[record].fields.emplace_back(f->name, std::move(fv));
    }
  }

  // --- deserialization -------------------------------------------------------

  Value read_object(HeapRef stream) {
    auto it = reads_.find(stream.id);
    if (it != reads_.end() && !it->second.stack.empty()) {
      auto& sess = it->second;
      auto& fr = sess.stack.back();
      const auto& custom = sess.form.records[fr.record].custom;
      if (fr.custom_cursor >= custom.size()) fail(ErrorKind::EndOfStream, "no more custom data");
      FormValue fv = custom[fr.custom_cursor++];
      return read_value(sess, stream, fv);
    }
    auto& obj = heap_[stream.id];
    auto& queue = channels_[obj.channel];
    if (obj.cursor >= queue.size()) fail(ErrorKind::EndOfStream, "channel '" + obj.channel + "' is empty");
    ReadSession sess;
    sess.form = queue[obj.cursor++];
    sess.materialized.resize(sess.form.records.size());
    auto& live = reads_[stream.id] = std::move(sess);
    Value v = read_value(live, stream, live.form.root);
    auto validations = live.validations;
    reads_.erase(stream.id);
    for (HeapRef r : validations) {
      auto m = p_.lookup_method(heap_[r.id].type, names::kValidateObject, 0);
      if (m) call(reader_name_, *m, r, {});
    }
    return v;
  }

  Value read_value(ReadSession& s, HeapRef stream, const FormValue& fv) {
    if (auto i = std::get_if<std::int64_t>(&fv)) return *i;
    if (auto b = std::get_if<bool>(&fv)) return *b;
    if (auto str = std::get_if<std::string>(&fv)) return *str;
    if (std::holds_alternative<std::monostate>(fv)) return std::monostate{};
    std::size_t id = std::get<RecordRef>(fv).id;
    if (id >= s.form.records.size()) fail(ErrorKind::EndOfStream, "dangling record reference");
    if (s.materialized[id]) return *s.materialized[id];
    const Record rec = s.form.records[id];
    if (rec.kind != RecordKind::Object) {
      ObjKind kind = rec.kind == RecordKind::Array  ? ObjKind::Array
                     : rec.kind == RecordKind::List ? ObjKind::List
                     : rec.kind == RecordKind::Set  ? ObjKind::Set
                                                    : ObjKind::Map;
      std::string type = rec.kind == RecordKind::Array ? rec.type + "[]"
                         : rec.kind == RecordKind::List ? "List"
                         : rec.kind == RecordKind::Set  ? "Set"
                                                        : "Map";
      HeapRef c = alloc(kind, type);
      s.materialized[id] = c;
      for (const auto& e : rec.elems) {
        Value v = read_value(s, stream, e);
        heap_[c.id].elems.push_back(std::move(v));
      }
      return c;
    }
    if (!p_.find_class(rec.type)) fail(ErrorKind::MissingClass, rec.type);
    if (!h_.is_serializable(rec.type)) fail(ErrorKind::NotSerializable, rec.type);
    HeapRef obj = alloc(ObjKind::Object, rec.type);
    s.materialized[id] = obj;
    call(reader_name_, h_.deser_constructor(rec.type), obj, {});
    if (auto ro = h_.callback(rec.type, names::kReadObject)) {
      s.stack.push_back({obj, id, 0});
      call(reader_name_, *ro, obj, {stream});
      s.stack.pop_back();
    } else {
      default_read(s, stream, obj, id);
    }
    if (opt_.mismatch)
      for (const auto& sup : rec.missing_supers)
        if (auto nd = p_.declared_method(sup, names::kReadObjectNoData, 0))
          if (h_.is_subtype(rec.type, sup)) call(reader_name_, *nd, obj, {});
    Value result = obj;
    if (auto rr = h_.callback(rec.type, names::kReadResolve)) {
      result = call(reader_name_, *rr, obj, {});
      s.materialized[id] = result;
    }
    return result;
  }

  void default_read(ReadSession& s, HeapRef stream, HeapRef obj, std::size_t record) {
    const auto fields = s.form.records[record].fields;
    const std::string type = heap_[obj.id].type;
    for (const auto& [name, fv] : fields) {
      const auto* decl = p_.lookup_field(type, name);
      if (!decl || decl->is_static || decl->is_transient) continue;
      Value v = read_value(s, stream, fv);
      heap_[obj.id].fields[name] = std::move(v);
    }
  }
};

}  // namespace

Result interpret(const sir::Program& program, const sir::MethodSignature& entry,
                 const std::vector<std::string>& argv, const Options& options) {
  auto m = program.resolve_signature(entry);
  if (!m || !program.method(*m).has_body() || !program.method(*m).is_static)
    throw OracleError(ErrorKind::MissingMain, "no static entry " + entry.str());
  Result res;
  Interpreter it(program, options, res);
  try {
    it.run(*m, argv);
  } catch (const OracleError& e) {
    res.error = e.kind();
    res.error_message = e.what();
    res.trace.push_back("error " + std::string(to_string(e.kind())));
  }
  return res;
}

}  // namespace sercg::oracle
