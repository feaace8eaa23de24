#include "tiss/cli.hpp"

int main(int argc, char** argv) { return tiss::run_cli(argc, argv); }
