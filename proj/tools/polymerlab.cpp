#include "polymerlab/cli.hpp"

int main(int argc, char** argv) { return polymerlab::run_cli(argc, argv); }
