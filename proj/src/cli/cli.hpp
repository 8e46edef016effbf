#pragma once

#include <ostream>

namespace sercg::cli {

enum Exit { kOk = 0, kFailure = 1, kInputError = 2, kCeiling = 3 };

/// Full command line; diagnostics go to `err`, summaries to `out`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace sercg::cli
