#include "lulcc/cli.hpp"

int main(int argc, char** argv) { return lulcc::cli::run(argc, argv); }
