#include <sstream>

#include "sercg/sir.hpp"

namespace sercg::sir {

namespace {

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      default: out.push_back(c);
    }
  }
  return out + "\"";
}

std::string literal(const Literal& l) {
  return std::visit(
      [](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, std::monostate>) return "null";
        else if constexpr (std::is_same_v<T, std::int64_t>) return std::to_string(v);
        else if constexpr (std::is_same_v<T, bool>) return v ? "true" : "false";
        else return quote(v);
      },
      l.value);
}

struct InstrPrinter {
  const MethodDecl& m;

  std::string v(ValueId id) const { return m.values.at(id).name; }
  std::string label(BlockId b) const {
    return b < m.blocks.size() ? m.blocks[b].label : std::string("?");
  }
  std::string args(const std::vector<ValueId>& a) const {
    std::string out = "(";
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (i) out += ", ";
      out += v(a[i]);
    }
    return out + ")";
  }
  std::string dst(const std::optional<ValueId>& d) const { return d ? v(*d) + " = " : ""; }

  std::string operator()(const ins::New& i) const { return v(i.dst) + " = new " + i.type; }
  std::string operator()(const ins::Const& i) const {
    return v(i.dst) + " = const " + literal(i.value);
  }
  std::string operator()(const ins::LoadStatic& i) const {
    return v(i.dst) + " = getstatic " + i.owner + "." + i.field;
  }
  std::string operator()(const ins::LoadInstance& i) const {
    return v(i.dst) + " = getfield " + v(i.base) + "." + i.field;
  }
  std::string operator()(const ins::StoreStatic& i) const {
    return "putstatic " + i.owner + "." + i.field + " = " + v(i.src);
  }
  std::string operator()(const ins::StoreInstance& i) const {
    return "putfield " + v(i.base) + "." + i.field + " = " + v(i.src);
  }
  std::string operator()(const ins::InstanceInvoke& i) const {
    return dst(i.dst) + "invoke " + v(i.receiver) + "." + i.method + args(i.args) + " @" + i.site;
  }
  std::string operator()(const ins::SpecialInvoke& i) const {
    return dst(i.dst) + "invokespecial " + v(i.receiver) + " " + i.owner + "." + i.method +
           args(i.args) + " @" + i.site;
  }
  std::string operator()(const ins::StaticInvoke& i) const {
    return dst(i.dst) + "invokestatic " + i.owner + "." + i.method + args(i.args) + " @" + i.site;
  }
  std::string operator()(const ins::Return& i) const {
    return i.value ? "return " + v(*i.value) : "return";
  }
  std::string operator()(const ins::ArrayNew& i) const {
    return v(i.dst) + " = newarray " + i.elem_type + " " + v(i.length);
  }
  std::string operator()(const ins::ArrayLoad& i) const {
    return v(i.dst) + " = aload " + v(i.array) + "[" + v(i.index) + "]";
  }
  std::string operator()(const ins::ArrayStore& i) const {
    return "astore " + v(i.array) + "[" + v(i.index) + "] = " + v(i.src);
  }
  std::string operator()(const ins::Phi& i) const {
    std::string out = v(i.dst) + " = phi(";
    for (std::size_t k = 0; k < i.operands.size(); ++k) {
      if (k) out += ", ";
      out += v(i.operands[k].first) + ":" + label(i.operands[k].second);
    }
    return out + ")";
  }
  std::string operator()(const ins::CheckCast& i) const {
    return v(i.dst) + " = cast " + i.type + " " + v(i.src);
  }
  std::string operator()(const ins::Branch& i) const {
    return "br " + v(i.cond) + " " + label(i.then_block) + " " + label(i.else_block);
  }
  std::string operator()(const ins::Goto& i) const { return "goto " + label(i.target); }
  std::string operator()(const ins::ContainerNew& i) const {
    std::string kind = i.kind == ContainerKind::List  ? "newlist"
                       : i.kind == ContainerKind::Set ? "newset"
                                                      : "newmap";
    return v(i.dst) + " = " + kind;
  }
  std::string operator()(const ins::ContainerAdd& i) const {
    return "add " + v(i.container) + " " + v(i.value);
  }
  std::string operator()(const ins::ContainerPut& i) const {
    return "put " + v(i.container) + " " + v(i.key) + " " + v(i.value);
  }
  std::string operator()(const ins::ContainerGet& i) const {
    return v(i.dst) + " = get " + v(i.container) + " " + v(i.key);
  }
};

void print_header(std::ostringstream& os, const MethodDecl& m) {
  os << "method " << (m.is_static ? "static " : "") << m.return_type << " " << m.name << "(";
  for (std::size_t i = 0; i < m.params.size(); ++i) {
    if (i) os << ", ";
    os << m.params[i].type << " " << m.params[i].name;
  }
  os << ")";
}

void print_method_into(std::ostringstream& os, const MethodDecl& m, const std::string& indent) {
  os << indent;
  print_header(os, m);
  if (!m.has_body()) {
    os << ";\n";
    return;
  }
  os << " {\n";
  InstrPrinter p{m};
  for (const auto& b : m.blocks) {
    os << indent << "  " << b.label << ":\n";
    for (const auto& i : b.instrs) os << indent << "    " << std::visit(p, i) << ";\n";
  }
  os << indent << "}\n";
}

}  // namespace

std::string print_instruction(const MethodDecl& method, const Instruction& instr) {
  return std::visit(InstrPrinter{method}, instr);
}

std::string print_method(const Program&, const MethodDecl& method) {
  std::ostringstream os;
  print_method_into(os, method, "");
  return os.str();
}

std::string print_program(const Program& program) {
  std::ostringstream os;
  bool first = true;
  for (const auto& cls : program.classes) {
    if (cls.is_intrinsic) continue;
    if (!first) os << "\n";
    first = false;
    os << (cls.is_interface ? "interface " : "class ") << cls.name;
    if (cls.is_interface) {
      for (std::size_t i = 0; i < cls.interfaces.size(); ++i)
        os << (i ? ", " : " extends ") << cls.interfaces[i];
    } else {
      if (cls.superclass && *cls.superclass != names::kObject) os << " extends " << *cls.superclass;
      for (std::size_t i = 0; i < cls.interfaces.size(); ++i)
        os << (i ? ", " : " implements ") << cls.interfaces[i];
    }
    if (cls.visibility == Visibility::Package) os << " package";
    if (cls.is_abstract) os << " abstract";
    os << " {\n";
    for (const auto& f : cls.fields)
      os << "  field " << (f.is_static ? "static " : "") << (f.is_transient ? "transient " : "")
         << f.type << " " << f.name << ";\n";
    for (MethodId id : cls.methods) print_method_into(os, program.method(id), "  ");
    os << "}\n";
  }
  return os.str();
}

}  // namespace sercg::sir
