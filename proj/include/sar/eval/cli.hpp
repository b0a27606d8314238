#pragma once

#include <iosfwd>

namespace sar {

// Subcommands: ingest, synth, train, evaluate, compare, gradcheck.
// Exit codes: 0 success, 1 usage or config error, 2 data error,
// 3 numeric divergence. Diagnostics go to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace sar
