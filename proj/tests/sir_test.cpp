#include <gtest/gtest.h>

#include <random>

#include "sercg/sir.hpp"
#include "test_util.hpp"

using namespace sercg::sir;
using sercg::fixtures_io::fixture;

namespace {

std::vector<DiagnosticKind> kinds(const std::vector<Diagnostic>& diags) {
  std::vector<DiagnosticKind> out;
  for (const auto& d : diags) out.push_back(d.kind);
  return out;
}

std::vector<DiagnosticKind> parse_error_kinds(const std::string& src) {
  try {
    parse_program(src);
  } catch (const ParseError& e) {
    return kinds(e.diagnostics());
  }
  return {};
}

}  // namespace

TEST(Parse, EmptySourceHasOnlyIntrinsics) {
  Program p = parse_program("");
  EXPECT_EQ(p.user_class_count(), 0u);
  EXPECT_TRUE(p.find_class("Serializable"));
  EXPECT_TRUE(p.find_class("ObjectInputValidation"));
  EXPECT_TRUE(p.find_class("ObjIn"));
  EXPECT_TRUE(p.find_class("ObjOut"));
  EXPECT_TRUE(p.find_class("Sys"));
  EXPECT_TRUE(p.find_class("List"));
  EXPECT_TRUE(validate(p).empty());
}

TEST(Parse, ShelterShape) {
  Program p = parse_program(fixture("shelter/program.sir"));
  EXPECT_EQ(p.user_class_count(), 4u);
  EXPECT_TRUE(p.declared_method("Cat", "readObject", 1));
  EXPECT_TRUE(p.declared_method("Cat", "writeObject", 1));
  EXPECT_TRUE(p.declared_method("Dog", "readResolve", 0));
  EXPECT_TRUE(p.declared_method("Dog", "writeReplace", 0));
  EXPECT_TRUE(validate(p).empty());
}

TEST(Parse, DoubleDefinitionIsSsaViolation) {
  auto k = parse_error_kinds(R"(
class A {
  method static void m() {
    L0:
      x = const 1;
      x = const 2;
      return;
  }
})");
  ASSERT_FALSE(k.empty());
  EXPECT_EQ(k.front(), DiagnosticKind::SsaViolation);
}

TEST(Parse, UndominatedUseIsSsaViolation) {
  auto k = parse_error_kinds(R"(
class A {
  method static void m(bool c) {
    L0:
      br c L1 L2;
    L1:
      x = const 1;
      goto L3;
    L2:
      goto L3;
    L3:
      invokestatic Sys.print(x) @s1;
      return;
  }
})");
  ASSERT_EQ(k.size(), 1u);
  EXPECT_EQ(k.front(), DiagnosticKind::SsaViolation);
}

TEST(Parse, PhiJoinsBranches) {
  Program p = parse_program(R"(
class A {
  method static Object m(bool c) {
    L0:
      br c L1 L2;
    L1:
      x = new A;
      goto L3;
    L2:
      y = const null;
      goto L3;
    L3:
      z = phi(x:L1, y:L2);
      return z;
  }
})");
  const auto& m = p.method(*p.declared_method("A", "m", 1));
  EXPECT_EQ(m.values[*m.find_value("z")].type, "A");
}

TEST(Parse, SyntaxErrorHasPosition) {
  try {
    parse_program("class A {\n  field int;\n}");
    FAIL();
  } catch (const ParseError& e) {
    ASSERT_EQ(e.diagnostics().size(), 1u);
    EXPECT_EQ(e.diagnostics()[0].kind, DiagnosticKind::SyntaxError);
    EXPECT_EQ(e.diagnostics()[0].line, 2);
  }
}

TEST(Parse, UnknownFieldIsResolutionError) {
  auto k = parse_error_kinds(R"(
class A {
  method void m() {
    L0:
      x = getfield this.nope;
      return;
  }
})");
  ASSERT_EQ(k.size(), 1u);
  EXPECT_EQ(k.front(), DiagnosticKind::ResolutionError);
}

TEST(Validate, CyclicHierarchy) {
  Program p = parse_program("class A extends A {\n}\n");
  EXPECT_EQ(kinds(validate(p)), std::vector{DiagnosticKind::CyclicHierarchy});
}

TEST(Validate, StaticReadObjectIsBadCallbackShape) {
  Program p = parse_program(R"(
class A implements Serializable {
  method static void readObject(ObjIn s) {
    L0:
      return;
  }
})");
  EXPECT_EQ(kinds(validate(p)), std::vector{DiagnosticKind::BadCallbackShape});
}

TEST(Validate, OtherStructuralErrors) {
  Program p = parse_program(R"(
class B {
  field int f;
  field int f;
  method void m();
}
class C {
  method static void a() {
    L0:
      invokestatic C.a() @dup;
      invokestatic C.a() @dup;
  }
}
class D extends Serializable {
}
)");
  auto k = kinds(validate(p));
  std::vector<DiagnosticKind> want{DiagnosticKind::DuplicateField, DiagnosticKind::AbstractInConcrete,
                                   DiagnosticKind::DuplicateSite, DiagnosticKind::BadHierarchy};
  std::sort(k.begin(), k.end());
  std::sort(want.begin(), want.end());
  // Missing terminator is also reported for C.a.
  want.push_back(DiagnosticKind::MissingTerminator);
  std::sort(want.begin(), want.end());
  EXPECT_EQ(k, want);
}

TEST(Validate, Deterministic) {
  std::string src = fixture("shelter/program.sir") + "\nclass Z extends Z {\n}\n";
  EXPECT_EQ(validate(parse_program(src)), validate(parse_program(src)));
}

TEST(Lookup, NearestDeclaration) {
  Program p = parse_program(fixture("shelter/program.sir"));
  auto cat = p.lookup_method("Cat", "readObject", 1);
  ASSERT_TRUE(cat);
  EXPECT_EQ(p.method(*cat).qualified(), "Cat.readObject(ObjIn)");
  EXPECT_FALSE(p.lookup_method("Dog", "readObject", 1));
  EXPECT_THROW(p.lookup_method("Nope", "m", 0), UnknownClass);

  Program q = parse_program(R"(
class A {
  method void m() {
    L0:
      return;
  }
}
class B extends A {
  method void m() {
    L0:
      return;
  }
}
class C extends B {
})");
  EXPECT_EQ(q.method(*q.lookup_method("B", "m", 0)).owner, "B");
  EXPECT_EQ(q.method(*q.lookup_method("C", "m", 0)).owner, "B");
  EXPECT_EQ(q.method(*q.lookup_method("A", "m", 0)).owner, "A");
}

TEST(RoundTrip, Shelter) {
  Program p = parse_program(fixture("shelter/program.sir"));
  std::string text = print_program(p);
  Program q = parse_program(text);
  EXPECT_EQ(print_program(q), text);
  EXPECT_EQ(p.methods, q.methods);
}

TEST(Signatures, ParseAndResolve) {
  auto sig = parse_method_signature("Shelter.main(String[])");
  ASSERT_TRUE(sig);
  EXPECT_EQ(sig->owner, "Shelter");
  EXPECT_EQ(sig->name, "main");
  EXPECT_EQ(sig->param_types, std::vector<std::string>{"String[]"});
  auto alt = parse_method_signature("Main.main(String a[])");
  ASSERT_TRUE(alt);
  EXPECT_EQ(alt->param_types, std::vector<std::string>{"String[]"});
  Program p = parse_program(fixture("shelter/program.sir"));
  EXPECT_TRUE(p.resolve_signature(*sig));
  EXPECT_FALSE(parse_method_signature("garbage"));
}

TEST(Scope, FileParsing) {
  Program p = parse_program(fixture("shelter/program.sir"));
  apply_scope_file(p, "Pet,library\nDog,excluded\n");
  EXPECT_EQ(p.scope_of("Pet"), Scope::Library);
  EXPECT_EQ(p.scope_of("Dog"), Scope::Excluded);
  EXPECT_EQ(p.scope_of("Cat"), Scope::Application);
  EXPECT_EQ(p.scope_of("ObjIn"), Scope::Library);
  EXPECT_THROW(apply_scope_file(p, "Pet,weird\n"), ParseError);
}

// Random straight-line and diamond-shaped programs survive print/parse.
TEST(RoundTrip, RandomPrograms) {
  std::mt19937 rng(7);
  for (int iter = 0; iter < 200; ++iter) {
    std::ostringstream src;
    int nclasses = 1 + static_cast<int>(rng() % 4);
    int site = 0;
    for (int c = 0; c < nclasses; ++c) {
      src << "class K" << c;
      if (c > 0 && rng() % 2) src << " extends K" << (rng() % c);
      if (rng() % 2) src << " implements Serializable";
      if (rng() % 3 == 0) src << " package";
      src << " {\n";
      src << "  field K" << c << " self;\n";
      if (rng() % 2) src << "  field transient int n;\n";
      src << "  field static String label;\n";
      src << "  method Object m" << c << "(bool b, int i) {\n    L0:\n";
      src << "      a = new K" << c << ";\n";
      src << "      s = const \"q\\\"x\\n\";\n";
      src << "      putstatic K" << c << ".label = s;\n";
      if (rng() % 2) {
        src << "      putfield a.self = this;\n";
        src << "      g = getfield a.self;\n";
      }
      src << "      l = newlist;\n      add l a;\n      k = const 0;\n      e = get l k;\n";
      src << "      arr = newarray Object i;\n      astore arr[k] = e;\n      x = aload arr[k];\n";
      src << "      r = invoke a.m" << c << "(b, i) @r" << site++ << ";\n";
      src << "      br b T F;\n    T:\n      t = cast K" << c << " x;\n      goto J;\n";
      src << "    F:\n      n = const null;\n      goto J;\n";
      src << "    J:\n      p = phi(t:T, n:F);\n      return p;\n  }\n}\n";
    }
    Program p = parse_program(src.str());
    ASSERT_TRUE(validate(p).empty()) << src.str();
    std::string text = print_program(p);
    Program q = parse_program(text);
    EXPECT_EQ(print_program(q), text);
    EXPECT_EQ(p.methods, q.methods);
  }
}
