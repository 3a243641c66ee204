#include "hfedf/cli.hpp"

int main(int argc, char** argv) { return hfedf::cli_main(argc, argv); }
