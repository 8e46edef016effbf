#include <cctype>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>

#include "checks.hpp"
#include "sercg/sir.hpp"

namespace sercg::sir {

namespace {

constexpr std::string_view kPrelude = R"(class Object {
  method void <init>();
}
interface Serializable {
}
interface ObjectInputValidation {
  method void validateObject();
}
class ObjOut {
  method void <init>(Object sink);
  method void writeObject(Object obj);
  method void defaultWriteObject();
}
class ObjIn {
  method void <init>(Object source);
  method Object readObject();
  method void defaultReadObject();
  method void registerValidation(ObjectInputValidation obj);
}
class FileOut {
  method void <init>(String path);
}
class FileIn {
  method void <init>(String path);
}
class List implements Serializable {
}
class Set implements Serializable {
}
class Map implements Serializable {
}
class Sys {
  method static void exec(String cmd);
  method static void writeFile(String path, String data);
  method static void eval(String code);
  method static void print(Object value);
  method static bool eq(Object a, Object b);
  method static String concat(Object a, Object b);
  method static bool isNull(Object value);
  method static bool isEmpty(String s);
  method static bool not(bool b);
}
)";

enum class Tok { Ident, Number, String, Punct, End };

struct Token {
  Tok kind = Tok::End;
  std::string text;
  int line = 0;
  int col = 0;
};

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    for (;;) {
      skip_space();
      Token t;
      t.line = line_;
      t.col = col_;
      if (pos_ >= src_.size()) {
        t.kind = Tok::End;
        out.push_back(t);
        return out;
      }
      char c = src_[pos_];
      if (std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == '$' ||
          (c == '<' && pos_ + 1 < src_.size() && std::isalpha(static_cast<unsigned char>(src_[pos_ + 1])))) {
        t.kind = Tok::Ident;
        while (pos_ < src_.size()) {
          char d = src_[pos_];
          if (std::isalnum(static_cast<unsigned char>(d)) || d == '_' || d == '$' || d == '.' ||
              d == '<' || d == '>') {
            t.text.push_back(d);
            advance();
          } else {
            break;
          }
        }
      } else if (std::isdigit(static_cast<unsigned char>(c)) ||
                 (c == '-' && pos_ + 1 < src_.size() &&
                  std::isdigit(static_cast<unsigned char>(src_[pos_ + 1])))) {
        t.kind = Tok::Number;
        t.text.push_back(c);
        advance();
        while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
          t.text.push_back(src_[pos_]);
          advance();
        }
      } else if (c == '"') {
        t.kind = Tok::String;
        advance();
        bool closed = false;
        while (pos_ < src_.size()) {
          char d = src_[pos_];
          advance();
          if (d == '"') {
            closed = true;
            break;
          }
          if (d == '\\' && pos_ < src_.size()) {
            char e = src_[pos_];
            advance();
            t.text.push_back(e == 'n' ? '\n' : e == 't' ? '\t' : e);
          } else {
            t.text.push_back(d);
          }
        }
        if (!closed) fail(t, "unterminated string literal");
      } else if (std::string_view("{}();,=:@[]").find(c) != std::string_view::npos) {
        t.kind = Tok::Punct;
        t.text.push_back(c);
        advance();
      } else {
        fail(t, std::string("unexpected character '") + c + "'");
      }
      out.push_back(std::move(t));
    }
  }

 private:
  [[noreturn]] void fail(const Token& at, const std::string& msg) {
    throw ParseError({Diagnostic{DiagnosticKind::SyntaxError, msg, "", "", -1, -1, at.line, at.col}});
  }
  void advance() {
    if (src_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }
  void skip_space() {
    while (pos_ < src_.size()) {
      char c = src_[pos_];
      if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else if (c == '/' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '/') {
        while (pos_ < src_.size() && src_[pos_] != '\n') advance();
      } else {
        break;
      }
    }
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

// Splits `a.b.C.f` into ("a.b.C", "f").
std::pair<std::string, std::string> split_member(const std::string& text) {
  auto dot = text.rfind('.');
  if (dot == std::string::npos) return {"", text};
  return {text.substr(0, dot), text.substr(dot + 1)};
}

class Parser {
 public:
  Parser(std::vector<Token> toks, Program& program, bool intrinsic)
      : toks_(std::move(toks)), program_(program), intrinsic_(intrinsic) {}

  void parse() {
    while (peek().kind != Tok::End) parse_decl();
  }

 private:
  // Per-method value/label bookkeeping while a body is parsed.
  struct BodyState {
    MethodDecl* method = nullptr;
    std::unordered_map<std::string, ValueId> ids;
    std::vector<bool> defined;
    std::vector<Token> first_use;
    struct Fixup {
      std::size_t block;
      std::size_t index;
      int slot;  // 0/1 branch targets, goto target, or phi operand index + 2
      Token label;
    };
    std::vector<Fixup> fixups;
  };

  const Token& peek(std::size_t k = 0) const {
    return toks_[std::min(pos_ + k, toks_.size() - 1)];
  }
  Token next() { return toks_[std::min(pos_++, toks_.size() - 1)]; }

  [[noreturn]] void fail(const Token& at, const std::string& msg) {
    throw ParseError({Diagnostic{DiagnosticKind::SyntaxError, msg, "", "", -1, -1, at.line, at.col}});
  }
  bool is_punct(const Token& t, char c) const {
    return t.kind == Tok::Punct && t.text.size() == 1 && t.text[0] == c;
  }
  bool is_word(const Token& t, std::string_view w) const {
    return t.kind == Tok::Ident && t.text == w;
  }
  void expect_punct(char c) {
    Token t = next();
    if (!is_punct(t, c)) fail(t, std::string("expected '") + c + "'" + got(t));
  }
  static std::string got(const Token& t) {
    if (t.kind == Tok::End) return ", got end of input";
    return ", got '" + t.text + "'";
  }
  std::string expect_ident(const char* what) {
    Token t = next();
    if (t.kind != Tok::Ident) fail(t, std::string("expected ") + what + got(t));
    return t.text;
  }
  std::string parse_type() {
    std::string t = expect_ident("type name");
    while (is_punct(peek(), '[') && is_punct(peek(1), ']')) {
      next();
      next();
      t += "[]";
    }
    return t;
  }

  void parse_decl() {
    Token head = next();
    bool is_interface = is_word(head, "interface");
    if (!is_interface && !is_word(head, "class")) fail(head, "expected 'class' or 'interface'" + got(head));
    ClassDecl cls;
    cls.line = head.line;
    cls.is_interface = is_interface;
    cls.is_intrinsic = intrinsic_;
    cls.name = expect_ident("class name");
    for (;;) {
      const Token& t = peek();
      if (is_word(t, "extends")) {
        next();
        if (is_interface) {
          cls.interfaces.push_back(expect_ident("interface name"));
          while (is_punct(peek(), ',')) {
            next();
            cls.interfaces.push_back(expect_ident("interface name"));
          }
        } else {
          cls.superclass = expect_ident("superclass name");
        }
      } else if (is_word(t, "implements") && !is_interface) {
        next();
        cls.interfaces.push_back(expect_ident("interface name"));
        while (is_punct(peek(), ',')) {
          next();
          cls.interfaces.push_back(expect_ident("interface name"));
        }
      } else if (is_word(t, "public")) {
        next();
        cls.visibility = Visibility::Public;
      } else if (is_word(t, "package")) {
        next();
        cls.visibility = Visibility::Package;
      } else if (is_word(t, "abstract")) {
        next();
        cls.is_abstract = true;
      } else {
        break;
      }
    }
    if (!cls.superclass && !is_interface && cls.name != names::kObject)
      cls.superclass = std::string(names::kObject);
    expect_punct('{');
    while (!is_punct(peek(), '}')) {
      Token t = peek();
      if (is_word(t, "field")) {
        parse_field(cls);
      } else if (is_word(t, "method")) {
        parse_method(cls);
      } else {
        fail(t, "expected 'field', 'method' or '}'" + got(t));
      }
    }
    expect_punct('}');
    program_.classes.push_back(std::move(cls));
  }

  void parse_field(ClassDecl& cls) {
    next();
    FieldDecl f;
    for (;;) {
      if (is_word(peek(), "static")) {
        next();
        f.is_static = true;
      } else if (is_word(peek(), "transient")) {
        next();
        f.is_transient = true;
      } else {
        break;
      }
    }
    f.type = parse_type();
    f.name = expect_ident("field name");
    expect_punct(';');
    cls.fields.push_back(std::move(f));
  }

  void parse_method(ClassDecl& cls) {
    Token head = next();
    MethodDecl m;
    m.owner = cls.name;
    m.line = head.line;
    if (is_word(peek(), "static")) {
      next();
      m.is_static = true;
    }
    m.return_type = parse_type();
    m.name = expect_ident("method name");
    expect_punct('(');
    if (!is_punct(peek(), ')')) {
      for (;;) {
        Param p;
        p.type = parse_type();
        p.name = expect_ident("parameter name");
        m.params.push_back(std::move(p));
        if (is_punct(peek(), ',')) {
          next();
          continue;
        }
        break;
      }
    }
    expect_punct(')');
    if (!m.is_static) m.values.push_back({"this", cls.name});
    for (const auto& p : m.params) m.values.push_back({p.name, p.type});
    if (is_punct(peek(), ';')) {
      next();
      m.is_intrinsic = intrinsic_ && !cls.is_interface;
    } else {
      expect_punct('{');
      parse_body(m);
      expect_punct('}');
    }
    cls.methods.push_back(static_cast<MethodId>(program_.methods.size()));
    program_.methods.push_back(std::move(m));
  }

  ValueId use_value(BodyState& st, const Token& t) {
    if (t.kind != Tok::Ident) fail(t, "expected value name" + got(t));
    auto it = st.ids.find(t.text);
    if (it != st.ids.end()) return it->second;
    auto id = static_cast<ValueId>(st.method->values.size());
    st.method->values.push_back({t.text, ""});
    st.defined.push_back(false);
    st.first_use.push_back(t);
    st.ids.emplace(t.text, id);
    return id;
  }
  ValueId use_value(BodyState& st) { return use_value(st, next()); }

  ValueId define_value(BodyState& st, const Token& t) {
    auto it = st.ids.find(t.text);
    if (it != st.ids.end()) {
      st.defined[it->second] = true;
      return it->second;
    }
    ValueId id = use_value(st, t);
    st.defined[id] = true;
    return id;
  }

  std::vector<ValueId> parse_args(BodyState& st) {
    expect_punct('(');
    std::vector<ValueId> args;
    if (!is_punct(peek(), ')')) {
      for (;;) {
        args.push_back(use_value(st));
        if (is_punct(peek(), ',')) {
          next();
          continue;
        }
        break;
      }
    }
    expect_punct(')');
    return args;
  }

  std::string parse_site() {
    Token at = next();
    if (!is_punct(at, '@')) fail(at, "expected '@site' after call" + got(at));
    Token s = next();
    if (s.kind != Tok::Ident && s.kind != Tok::Number) fail(s, "expected site id" + got(s));
    return s.text;
  }

  void parse_body(MethodDecl& m) {
    BodyState st;
    st.method = &m;
    for (std::size_t i = 0; i < m.values.size(); ++i) {
      st.ids.emplace(m.values[i].name, static_cast<ValueId>(i));
      st.defined.push_back(true);
      st.first_use.push_back({});
    }
    std::map<std::string, Token> label_tokens;
    while (!is_punct(peek(), '}')) {
      if (is_word(peek(), "block")) next();
      Token label = next();
      if (label.kind != Tok::Ident || !is_punct(peek(), ':'))
        fail(label, "expected block label" + got(label));
      next();
      if (label_tokens.count(label.text))
        fail(label, "duplicate block label '" + label.text + "'");
      label_tokens.emplace(label.text, label);
      m.blocks.push_back({label.text, {}, {}});
      while (!is_punct(peek(), '}') && !(peek().kind == Tok::Ident && is_punct(peek(1), ':')) &&
             !is_word(peek(), "block")) {
        int line = peek().line;
        m.blocks.back().instrs.push_back(parse_instr(st));
        m.blocks.back().lines.push_back(line);
      }
    }
    for (const auto& fx : st.fixups) {
      auto blk = m.find_block(fx.label.text);
      if (!blk) {
        diags_.push_back({DiagnosticKind::ResolutionError, "unknown block label '" + fx.label.text + "'",
                          m.owner, m.name, static_cast<int>(fx.block), static_cast<int>(fx.index),
                          fx.label.line, fx.label.col});
        continue;
      }
      auto& instr = m.blocks[fx.block].instrs[fx.index];
      if (auto* b = std::get_if<ins::Branch>(&instr)) {
        (fx.slot == 0 ? b->then_block : b->else_block) = *blk;
      } else if (auto* g = std::get_if<ins::Goto>(&instr)) {
        g->target = *blk;
      } else if (auto* p = std::get_if<ins::Phi>(&instr)) {
        p->operands[static_cast<std::size_t>(fx.slot - 2)].second = *blk;
      }
    }
    for (std::size_t i = 0; i < st.defined.size(); ++i) {
      if (!st.defined[i]) {
        const Token& t = st.first_use[i];
        diags_.push_back({DiagnosticKind::ResolutionError, "value '" + m.values[i].name + "' is never defined",
                          m.owner, m.name, -1, -1, t.line, t.col});
      }
    }
  }

  Instruction parse_instr(BodyState& st) {
    std::size_t block = st.method->blocks.size() - 1;
    std::size_t index = st.method->blocks.back().instrs.size();
    std::optional<Token> dst_tok;
    if (peek().kind == Tok::Ident && is_punct(peek(1), '=')) {
      dst_tok = next();
      next();
    }
    Token op = next();
    if (op.kind != Tok::Ident) fail(op, "expected instruction" + got(op));
    auto need_dst = [&]() -> ValueId {
      if (!dst_tok) fail(op, "'" + op.text + "' needs a result value");
      return define_value(st, *dst_tok);
    };
    auto opt_dst = [&]() -> std::optional<ValueId> {
      if (!dst_tok) return std::nullopt;
      return define_value(st, *dst_tok);
    };
    auto no_dst = [&] {
      if (dst_tok) fail(*dst_tok, "'" + op.text + "' produces no value");
    };
    Instruction result = ins::Return{};
    const std::string& w = op.text;
    if (w == "new") {
      ValueId d = need_dst();
      result = ins::New{d, parse_type()};
    } else if (w == "const") {
      ValueId d = need_dst();
      Token lit = next();
      Literal l;
      if (lit.kind == Tok::Number) {
        l.value = static_cast<std::int64_t>(std::stoll(lit.text));
      } else if (lit.kind == Tok::String) {
        l.value = lit.text;
      } else if (is_word(lit, "true") || is_word(lit, "false")) {
        l.value = lit.text == "true";
      } else if (is_word(lit, "null")) {
        l.value = std::monostate{};
      } else {
        fail(lit, "expected literal" + got(lit));
      }
      result = ins::Const{d, std::move(l)};
    } else if (w == "getstatic") {
      ValueId d = need_dst();
      auto [owner, field] = split_member(expect_ident("Type.field"));
      if (owner.empty()) fail(op, "getstatic needs Type.field");
      result = ins::LoadStatic{d, owner, field};
    } else if (w == "getfield") {
      ValueId d = need_dst();
      Token t = next();
      auto [base, field] = split_member(t.text);
      if (t.kind != Tok::Ident || base.empty()) fail(t, "getfield needs value.field");
      Token bt = t;
      bt.text = base;
      result = ins::LoadInstance{d, use_value(st, bt), field};
    } else if (w == "putfield" || w == "putstatic") {
      no_dst();
      Token t = next();
      auto [base, field] = split_member(t.text);
      if (t.kind != Tok::Ident || base.empty()) fail(t, w + " needs a qualified target");
      expect_punct('=');
      if (w == "putfield") {
        Token bt = t;
        bt.text = base;
        ValueId b = use_value(st, bt);
        result = ins::StoreInstance{b, field, use_value(st)};
      } else {
        result = ins::StoreStatic{base, field, use_value(st)};
      }
    } else if (w == "invoke") {
      auto d = opt_dst();
      Token t = next();
      auto [recv, method] = split_member(t.text);
      if (t.kind != Tok::Ident || recv.empty()) fail(t, "invoke needs value.method");
      Token rt = t;
      rt.text = recv;
      ValueId r = use_value(st, rt);
      auto args = parse_args(st);
      result = ins::InstanceInvoke{d, parse_site(), r, method, std::move(args)};
    } else if (w == "invokestatic") {
      auto d = opt_dst();
      auto [owner, method] = split_member(expect_ident("Type.method"));
      if (owner.empty()) fail(op, "invokestatic needs Type.method");
      auto args = parse_args(st);
      result = ins::StaticInvoke{d, parse_site(), owner, method, std::move(args)};
    } else if (w == "invokespecial") {
      auto d = opt_dst();
      ValueId r = use_value(st);
      auto [owner, method] = split_member(expect_ident("Type.method"));
      if (owner.empty()) fail(op, "invokespecial needs Type.method");
      auto args = parse_args(st);
      result = ins::SpecialInvoke{d, parse_site(), r, owner, method, std::move(args)};
    } else if (w == "return") {
      no_dst();
      std::optional<ValueId> v;
      if (!is_punct(peek(), ';')) v = use_value(st);
      result = ins::Return{v};
    } else if (w == "phi") {
      ValueId d = need_dst();
      expect_punct('(');
      ins::Phi phi{d, {}};
      if (!is_punct(peek(), ')')) {
        for (;;) {
          ValueId v = use_value(st);
          expect_punct(':');
          Token label = next();
          if (label.kind != Tok::Ident) fail(label, "expected block label" + got(label));
          st.fixups.push_back({block, index, static_cast<int>(phi.operands.size()) + 2, label});
          phi.operands.emplace_back(v, kInvalidId);
          if (is_punct(peek(), ',')) {
            next();
            continue;
          }
          break;
        }
      }
      expect_punct(')');
      result = std::move(phi);
    } else if (w == "cast") {
      ValueId d = need_dst();
      std::string type = parse_type();
      result = ins::CheckCast{d, type, use_value(st)};
    } else if (w == "newarray") {
      ValueId d = need_dst();
      std::string type = parse_type();
      result = ins::ArrayNew{d, type, use_value(st)};
    } else if (w == "aload") {
      ValueId d = need_dst();
      ValueId a = use_value(st);
      expect_punct('[');
      ValueId i = use_value(st);
      expect_punct(']');
      result = ins::ArrayLoad{d, a, i};
    } else if (w == "astore") {
      no_dst();
      ValueId a = use_value(st);
      expect_punct('[');
      ValueId i = use_value(st);
      expect_punct(']');
      expect_punct('=');
      result = ins::ArrayStore{a, i, use_value(st)};
    } else if (w == "br") {
      no_dst();
      ValueId c = use_value(st);
      Token l1 = next();
      Token l2 = next();
      if (l1.kind != Tok::Ident || l2.kind != Tok::Ident) fail(op, "br needs two block labels");
      st.fixups.push_back({block, index, 0, l1});
      st.fixups.push_back({block, index, 1, l2});
      result = ins::Branch{c, kInvalidId, kInvalidId};
    } else if (w == "goto") {
      no_dst();
      Token l = next();
      if (l.kind != Tok::Ident) fail(l, "goto needs a block label");
      st.fixups.push_back({block, index, 0, l});
      result = ins::Goto{kInvalidId};
    } else if (w == "newlist" || w == "newset" || w == "newmap") {
      ValueId d = need_dst();
      auto kind = w == "newlist" ? ContainerKind::List
                  : w == "newset" ? ContainerKind::Set
                                  : ContainerKind::Map;
      result = ins::ContainerNew{d, kind};
    } else if (w == "add") {
      no_dst();
      ValueId c = use_value(st);
      result = ins::ContainerAdd{c, use_value(st)};
    } else if (w == "put") {
      no_dst();
      ValueId c = use_value(st);
      ValueId k = use_value(st);
      result = ins::ContainerPut{c, k, use_value(st)};
    } else if (w == "get") {
      ValueId d = need_dst();
      ValueId c = use_value(st);
      result = ins::ContainerGet{d, c, use_value(st)};
    } else {
      fail(op, "unknown instruction '" + w + "'");
    }
    expect_punct(';');
    return result;
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  Program& program_;
  bool intrinsic_;

 public:
  std::vector<Diagnostic> diags_;
};

}  // namespace

std::string_view prelude_source() { return kPrelude; }

Program parse_program(std::string_view text) {
  Program program;
  std::vector<Diagnostic> diags;
  {
    Parser prelude(Lexer(kPrelude).run(), program, true);
    prelude.parse();
  }
  Parser user(Lexer(text).run(), program, false);
  user.parse();
  diags = std::move(user.diags_);

  // Fill static types; collect resolution and SSA problems.
  for (auto& m : program.methods) {
    if (!m.has_body()) continue;
    auto types = detail::infer_types(program, m, &diags);
    for (std::size_t i = 0; i < m.values.size(); ++i) m.values[i].type = types[i];
    detail::check_ssa(program, m, diags);
  }
  std::vector<Diagnostic> fatal;
  for (auto& d : diags)
    if (d.kind == DiagnosticKind::ResolutionError || d.kind == DiagnosticKind::SsaViolation ||
        d.kind == DiagnosticKind::SyntaxError)
      fatal.push_back(std::move(d));
  if (!fatal.empty()) throw ParseError(std::move(fatal));
  return program;
}

}  // namespace sercg::sir
