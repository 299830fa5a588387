#include "blinkscope/cli.hpp"

int main(int argc, char** argv) { return blinkscope::cli::run_cli(argc, argv); }
