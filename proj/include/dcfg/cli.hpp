#pragma once

namespace dcfg::io {

/// Entry point behind the dcfg binary; exposed for in-process testing.
/// Subcommands: icp, rpgo, semsim. Exit codes: 0 success, 1 solver error,
/// 2 input or usage error.
int cli_main(int argc, const char* const* argv);

}  // namespace dcfg::io
