#include "gmethods/cli.hpp"

int main(int argc, char** argv) { return gmethods::cli_main(argc, argv); }
