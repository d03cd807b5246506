#pragma once

#include <iosfwd>

namespace culsim::cli {

/// Entry point of the `culsim` tool. Returns 0 on success, 1 on a runtime
/// error and 2 on a usage error.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace culsim::cli
