#pragma once

#include <ostream>

namespace css {

/// Exit codes: 0 success, 1 a check failed or the computation failed, 2 bad usage or input.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace css
