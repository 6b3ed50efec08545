#pragma once

#include <iosfwd>

namespace hmmon {

// Exit codes: 0 success or correct monitor, 1 usage/parse/validation error,
// 2 counterexample found, 3 learning aborted on a resource limit.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace hmmon
