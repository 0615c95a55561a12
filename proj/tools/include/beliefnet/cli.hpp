#pragma once

#include <iosfwd>

namespace beliefnet::cli {

enum ExitCode : int { ok = 0, failure = 1, usage = 2 };

/// Entry point of the `beliefnet` command. Results go to `out`, diagnostics
/// to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace beliefnet::cli
