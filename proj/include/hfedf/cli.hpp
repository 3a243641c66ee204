#pragma once

namespace hfedf {

/// Entry point of the command line tool: run / validate / resume.
/// Exit codes: 0 success, 1 usage or config error, 2 I/O error,
/// 3 completed with numerically diverged cells.
int cli_main(int argc, const char* const* argv);

}  // namespace hfedf
