#pragma once

namespace wlfrail {

/// Command-line entry point (fit / simulate / tau / predict).
/// Exit codes: 0 success, 1 usage error, 2 data error, 3 convergence failure.
int cli_main(int argc, const char* const* argv);

}  // namespace wlfrail
