#pragma once

namespace arhgls {

/// Command-line entry point; returns the process exit code (0 success,
/// 1 usage or configuration error, 2 numerical failure).
int cli_main(int argc, char** argv);

} // namespace arhgls
