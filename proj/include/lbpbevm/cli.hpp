#pragma once

namespace lbpbevm {

/// Entry point of the `lbpbevm` command. Returns the process exit code.
int run_cli(int argc, char** argv);

}  // namespace lbpbevm
