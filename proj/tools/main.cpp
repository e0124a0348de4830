#include "gridshield/cli.hpp"

int main(int argc, char** argv) { return gridshield::cli::run(argc, argv); }
