#include "dhmm/harness/cli.hpp"

int main(int argc, char** argv) { return dhmm::harness::run_cli(argc, argv); }
