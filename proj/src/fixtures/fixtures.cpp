#include <fstream>
#include <set>
#include <sstream>

#include "sercg/fixtures.hpp"
#include "sercg/hierarchy.hpp"
#include "sercg/oracle.hpp"

namespace sercg::fixtures {

namespace {

constexpr std::string_view kCallbacks[] = {sir::names::kWriteReplace, sir::names::kWriteObject,
                                           sir::names::kReadObject,   sir::names::kReadObjectNoData,
                                           sir::names::kReadResolve,  sir::names::kValidateObject};

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool has_no_arg_ctor(const sir::Program& p, const std::string& cls) {
  return p.resolve_signature({cls, std::string(sir::names::kInit), {}}).has_value();
}

std::string driver(const sir::Program& p, const std::string& cls, Wrapper w, const std::string& site) {
  std::ostringstream os;
  os << "class " << kDriverClass << " {\n"
     << "  method static void main(String[] args) {\n"
     << "    L0:\n"
     << "      g = new " << cls << ";\n";
  if (has_no_arg_ctor(p, cls)) os << "      invokespecial g " << cls << ".<init>() @" << site << ".new;\n";
  switch (w) {
    case Wrapper::Simple:
      break;
    case Wrapper::List:
      os << "      obj = newlist;\n      add obj g;\n";
      break;
    case Wrapper::Set:
      os << "      obj = newset;\n      add obj g;\n";
      break;
    case Wrapper::Map:
      os << "      obj = newmap;\n      key = const \"k\";\n      put obj key g;\n";
      break;
    case Wrapper::Array:
      os << "      n = const 1;\n      i = const 0;\n      obj = newarray " << cls << " n;\n"
         << "      astore obj[i] = g;\n";
      break;
  }
  os << "      path = const \"" << kChannel << "\";\n"
     << "      fo = new FileOut;\n"
     << "      invokespecial fo FileOut.<init>(path) @" << site << ".fout;\n"
     << "      out = new ObjOut;\n"
     << "      invokespecial out ObjOut.<init>(fo) @" << site << ".oout;\n"
     << "      invoke out.writeObject(" << (w == Wrapper::Simple ? "g" : "obj") << ") @" << site << ".write;\n"
     << "      fi = new FileIn;\n"
     << "      invokespecial fi FileIn.<init>(path) @" << site << ".fin;\n"
     << "      in = new ObjIn;\n"
     << "      invokespecial in ObjIn.<init>(fi) @" << site << ".oin;\n"
     << "      r = invoke in.readObject() @" << site << ".read;\n"
     << "      return;\n"
     << "  }\n"
     << "}\n";
  return os.str();
}

}  // namespace

std::string_view to_string(Wrapper w) {
  switch (w) {
    case Wrapper::Simple: return "simple";
    case Wrapper::List: return "list";
    case Wrapper::Set: return "set";
    case Wrapper::Map: return "map";
    case Wrapper::Array: return "array";
  }
  return "?";
}

std::vector<std::string> callback_classes(const sir::Program& p) {
  hierarchy::Hierarchy h(p);
  std::vector<std::string> out;
  for (const auto& c : p.classes) {
    if (c.is_intrinsic || !c.is_concrete() || !h.is_serializable(c.name)) continue;
    for (auto m : c.methods) {
      const auto& name = p.method(m).name;
      if (std::find(std::begin(kCallbacks), std::end(kCallbacks), name) != std::end(kCallbacks)) {
        out.push_back(c.name);
        break;
      }
    }
  }
  return out;
}

std::vector<FixtureCase> generate_battery(std::string_view base_source, const std::vector<std::string>& gadgets) {
  std::vector<FixtureCase> out;
  if (gadgets.empty()) return out;
  auto program = sir::parse_program(base_source);
  hierarchy::Hierarchy h(program);
  for (const auto& cls : gadgets) {
    if (!program.find_class(cls)) throw sir::UnknownClass(cls);
    auto cb = [&](std::string_view name) { return h.callback(cls, name); };
    bool any = false;
    for (auto n : kCallbacks) any |= cb(n).has_value();
    if (!any) throw NoCallbacks(cls);

    // Callbacks the protocol is guaranteed to invoke for a fresh instance.
    std::vector<std::pair<std::string, std::string>> expect;  // (site suffix, callee)
    auto q = [&](sir::MethodId m) { return program.method(m).qualified(); };
    if (auto wr = cb(sir::names::kWriteReplace)) {
      expect.emplace_back("write", q(*wr));
    } else {
      if (auto wo = cb(sir::names::kWriteObject)) expect.emplace_back("write", q(*wo));
      if (auto ro = cb(sir::names::kReadObject)) expect.emplace_back("read", q(*ro));
      if (auto rr = cb(sir::names::kReadResolve)) expect.emplace_back("read", q(*rr));
    }

    for (auto w : {Wrapper::Simple, Wrapper::List, Wrapper::Set, Wrapper::Map, Wrapper::Array}) {
      FixtureCase c;
      c.name = lower(cls) + "-" + std::string(to_string(w));
      std::string site = "bt." + lower(cls) + "." + std::string(to_string(w));
      c.source = std::string(base_source);
      if (!c.source.empty() && c.source.back() != '\n') c.source += '\n';
      c.source += "\n" + driver(program, cls, w, site);
      c.entrypoints = std::string(kDriverClass) + ".main(String[])\n";
      for (const auto& [suffix, callee] : expect) {
        c.annotations += site + "." + suffix + "," + callee + ",must-reach\n";
        c.expected_callbacks.push_back(callee);
      }
      out.push_back(std::move(c));
    }
  }
  return out;
}

FixtureCase generate_chain(const std::string& name, std::size_t links, const std::string& sink) {
  auto sig = sir::parse_method_signature(sink);
  if (!sig || sig->owner != sir::names::kSys || sig->param_types.empty() || sig->param_types.size() > 2)
    throw std::invalid_argument("chain sink must be a Sys method taking one or two Strings: " + sink);
  std::string px;
  for (char c : name)
    if (std::isalnum(static_cast<unsigned char>(c))) px += c;
  if (px.empty() || !std::isalpha(static_cast<unsigned char>(px[0]))) px = "C" + px;
  px[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(px[0])));
  auto link = [&](std::size_t i) { return px + "Link" + std::to_string(i); };
  std::string step = px + "Step";
  std::string site = lower(px);

  std::ostringstream os;
  os << "interface " << step << " {\n  method void fire(String c);\n}\n\n";
  os << "class " << px << "Trigger implements Serializable {\n"
     << "  field " << step << " head;\n  field String arg;\n"
     << "  method void readObject(ObjIn s) {\n    L0:\n"
     << "      invoke s.defaultReadObject() @" << site << ".rd;\n"
     << "      h = getfield this.head;\n      a = getfield this.arg;\n"
     << "      invoke h.fire(a) @" << site << ".head;\n      return;\n  }\n}\n\n";
  for (std::size_t i = 0; i < links; ++i)
    os << "class " << link(i) << " implements " << step << ", Serializable {\n"
       << "  field " << step << " next;\n"
       << "  method void fire(String c) {\n    L0:\n"
       << "      n = getfield this.next;\n"
       << "      invoke n.fire(c) @" << site << ".l" << i << ";\n      return;\n  }\n}\n\n";
  os << "class " << px << "Sink implements " << step << ", Serializable {\n"
     << "  method void fire(String c) {\n    L0:\n"
     << "      invokestatic " << sig->owner << "." << sig->name << "(" << (sig->param_types.size() == 2 ? "c, c" : "c") << ") @" << site
     << ".sink;\n      return;\n  }\n}\n\n";
  // Local implementation that never travels through a stream.
  os << "class " << px << "Echo implements " << step << " {\n"
     << "  method void fire(String c) {\n    L0:\n"
     << "      invokestatic Sys.print(c) @" << site << ".echo;\n      return;\n  }\n}\n\n";
  os << "class " << px << "Settings implements Serializable {\n  field String value;\n}\n\n";
  os << "class " << px << "Server {\n"
     << "  method static void main(String[] args) {\n    L0:\n"
     << "      e = new " << px << "Echo;\n"
     << "      t = const \"ready\";\n"
     << "      invoke e.fire(t) @" << site << ".ready;\n"
     << "      k = const 0;\n      path = aload args[k];\n"
     << "      fs = new FileIn;\n      invokespecial fs FileIn.<init>(path) @" << site << ".fin;\n"
     << "      in = new ObjIn;\n      invokespecial in ObjIn.<init>(fs) @" << site << ".oin;\n"
     << "      o = invoke in.readObject() @" << site << ".read;\n"
     << "      s = cast " << px << "Settings o;\n      return;\n  }\n}\n";

  FixtureCase c;
  c.name = name;
  c.source = os.str();
  c.entrypoints = px + "Server.main(String[])\n";
  c.annotations = site + ".read," + px + "Trigger.readObject(ObjIn),must-reach\n";
  c.expected_callbacks = {px + "Trigger.readObject(ObjIn)"};
  std::string channel = site + ".bin";
  oracle::FormBuilder b(channel);
  auto trigger = b.object(px + "Trigger");
  auto sink_rec = b.object(px + "Sink");
  oracle::FormValue next = sink_rec;
  for (std::size_t i = links; i-- > 0;) {
    auto r = b.object(link(i));
    b.set(r, "next", next);
    next = r;
  }
  b.set(trigger, "head", next).set(trigger, "arg", std::string("id"));
  c.payload = oracle::form_to_json(b.build(trigger));
  c.argv = {channel};
  return c;
}

std::vector<std::string> check_case(const FixtureCase& c) {
  std::vector<std::string> problems;
  sir::Program p;
  try {
    p = sir::parse_program(c.source);
  } catch (const sir::ParseError& e) {
    for (const auto& d : e.diagnostics()) problems.push_back(d.str());
    return problems;
  }
  for (const auto& d : sir::validate(p)) problems.push_back(d.str());
  std::set<std::string> sites;
  for (const auto& m : p.methods)
    for (const auto& b : m.blocks)
      for (const auto& i : b.instrs)
        if (auto s = sir::site_of(i); !s.empty()) sites.emplace(s);
  for (const auto& e : sir::parse_entrypoints(c.entrypoints))
    if (!p.resolve_signature(e)) problems.push_back("unknown entrypoint " + e.str());
  std::istringstream in(c.annotations);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    auto a = line.find(','), b = line.rfind(',');
    if (a == std::string::npos || a == b) {
      problems.push_back("malformed annotation " + line);
      continue;
    }
    auto site = line.substr(0, a);
    auto callee = line.substr(a + 1, b - a - 1);
    if (!sites.count(site)) problems.push_back("unknown annotation site " + site);
    auto sig = sir::parse_method_signature(callee);
    if (!sig || !p.resolve_signature(*sig)) problems.push_back("unknown annotation callee " + callee);
  }
  return problems;
}

void write_case(const FixtureCase& c, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto put = [&](const char* file, const std::string& text) {
    std::ofstream out(dir / file, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + (dir / file).string());
    out << text;
  };
  put("program.sir", c.source);
  put("entrypoints.csv", c.entrypoints);
  put("annotations.csv", c.annotations);
  std::string expected = c.mismatch ? "# mismatch\n" : "";
  for (const auto& e : c.expected_callbacks) expected += e + "\n";
  put("expected.csv", expected);
  if (!c.payload.empty()) put("payload.json", c.payload);
  if (!c.argv.empty()) {
    std::string a;
    for (const auto& s : c.argv) a += s + "\n";
    put("argv.txt", a);
  }
}

}  // namespace sercg::fixtures
