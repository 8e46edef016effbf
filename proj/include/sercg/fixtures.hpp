#pragma once

// Generated test corpora: per-class serialize/deserialize batteries and
// synthetic gadget chains.

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "sercg/sir.hpp"

namespace sercg::fixtures {

class NoCallbacks : public std::runtime_error {
 public:
  explicit NoCallbacks(const std::string& cls)
      : std::runtime_error("class " + cls + " declares no serialization callback") {}
};

enum class Wrapper { Simple, List, Set, Map, Array };
std::string_view to_string(Wrapper w);

struct FixtureCase {
  std::string name;
  std::string source;       // complete SIR program
  std::string entrypoints;  // CSV
  std::string annotations;  // CSV site,callee,polarity
  std::vector<std::string> expected_callbacks;
  bool mismatch = false;
  // Attacker-supplied input for oracle runs; empty when the case writes its own stream.
  std::string payload;
  std::vector<std::string> argv;
};

/// Driver class appended to every battery program.
inline constexpr std::string_view kDriverClass = "Harness";
inline constexpr std::string_view kChannel = "battery.bin";

/// Five cases per gadget class: the instance itself, then wrapped in a List,
/// Set, Map (as a value) and a one-element array. Each case writes the object
/// to a channel and reads it back.
std::vector<FixtureCase> generate_battery(std::string_view base_source, const std::vector<std::string>& gadget_classes);

/// Concrete serializable user classes that declare a callback, in declaration order.
std::vector<std::string> callback_classes(const sir::Program& program);

/// `links` intermediate hops between a deserialization callback and `sink`
/// (a Sys static taking one or two String arguments). The entry casts the
/// read result to an unrelated type.
FixtureCase generate_chain(const std::string& name, std::size_t links, const std::string& sink);

/// Problems with a case: parse or validation diagnostics, unknown annotation targets.
std::vector<std::string> check_case(const FixtureCase& c);

/// program.sir, entrypoints.csv, annotations.csv, expected.csv and, when
/// present, payload.json and argv.txt.
void write_case(const FixtureCase& c, const std::filesystem::path& dir);

}  // namespace sercg::fixtures
