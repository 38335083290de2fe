#pragma once

// Command line surface: validate, gen, formulate, solve, simulate, oracle
// and report subcommands over the library. Streams are injected so tests can
// capture output.

#include <iosfwd>

namespace decnet {

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace decnet
