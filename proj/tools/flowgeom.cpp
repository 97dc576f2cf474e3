#include "flowgeom/cli.hpp"

int main(int argc, char** argv) { return flowgeom::run_cli(argc, argv); }
