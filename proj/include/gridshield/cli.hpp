#pragma once

namespace gridshield::cli {

/// Entry point shared by the binary and the tests.
/// Exit codes: 0 success, 1 runtime failure, 2 usage or config error.
int run(int argc, const char* const* argv);

}  // namespace gridshield::cli
