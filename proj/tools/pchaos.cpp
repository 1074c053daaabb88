#include "pchaos/cli.hpp"

int main(int argc, char** argv) { return pchaos::cli::run(argc, argv); }
