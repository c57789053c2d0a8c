#pragma once

#include <atomic>
#include <iosfwd>

namespace hyrf::cli {

enum ExitCode { kOk = 0, kUsage = 1, kDataError = 2, kDiverged = 3 };

/// Runs the `hyrf` command line. Reports go to `out`, diagnostics to `err`.
/// Training stops early (and still writes its checkpoint) once `stop` is set.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err,
        const std::atomic<bool>* stop = nullptr);

}  // namespace hyrf::cli
