#include "crownbench/cli.hpp"

int main(int argc, char** argv) { return crownbench::cli::run(argc, argv); }
