#pragma once

// Fixture directories on disk and whole-fixture evaluation.

#include <filesystem>
#include <string>
#include <vector>

#include "sercg/eval.hpp"
#include "sercg/fixtures.hpp"

namespace sercg::corpus {

struct Fixture {
  std::string name;
  sir::Program program;
  std::vector<sir::MethodSignature> entrypoints;
  std::vector<eval::Annotation> annotations;
  std::vector<oracle::SerializedForm> payloads;
  std::vector<std::string> argv;
  bool mismatch = false;
};

/// Reads program.sir and entrypoints.csv plus the optional scope.csv,
/// annotations.csv, payload.json (one form or an array), argv.txt and
/// expected.csv (a `# mismatch` line turns on mismatch mode).
Fixture load(const std::filesystem::path& dir);
Fixture from_case(const fixtures::FixtureCase& c);

/// `root` itself when it holds a program.sir, else every such directory below it, sorted.
std::vector<std::filesystem::path> discover(const std::filesystem::path& root);

struct Outcome {
  eval::FixtureReport report;
  oracle::Result run;
  std::size_t extra_rounds = 0;
  std::size_t static_edges = 0;  // unfiltered, context-collapsed
};

/// Runs the oracle from the first entrypoint and the analysis, then compares.
Outcome evaluate(const Fixture& f, const analysis::Options& options, const eval::Filter& filter = {});

}  // namespace sercg::corpus
