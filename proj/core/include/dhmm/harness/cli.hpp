#pragma once

namespace dhmm::harness {

/// Entry point of the dhmm command-line tool; returns the process exit code.
int run_cli(int argc, char** argv);

}  // namespace dhmm::harness
