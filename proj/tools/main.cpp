#include "lbpbevm/cli.hpp"

int main(int argc, char** argv) { return lbpbevm::run_cli(argc, argv); }
