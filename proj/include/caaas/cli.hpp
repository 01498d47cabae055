#pragma once

#include <ostream>

namespace caaas {

// Exit codes: 0 success, 1 protocol or verdict failure, 2 usage error.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace caaas
