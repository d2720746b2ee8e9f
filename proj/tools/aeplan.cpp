#include "aeplan/harness/cli.hpp"

int main(int argc, char** argv) { return aeplan::harness::cli_main(argc, argv); }
