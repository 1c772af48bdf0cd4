#pragma once

#include <string>
#include <vector>

namespace uwbsel {

/// Entry point behind the `uwbsel` binary. Subcommands: run, compare,
/// validate. Exit codes: 0 success, 1 scenario/parse error, 2 runtime or
/// filter error.
int cli_main(int argc, const char* const argv[]);

/// Convenience for in-process invocation from tests; `args` excludes the
/// program name.
int cli_main(const std::vector<std::string>& args);

}  // namespace uwbsel
