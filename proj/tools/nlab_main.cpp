#include "nlab/cli.hpp"

int main(int argc, char** argv) { return nlab::run_cli(argc, argv); }
