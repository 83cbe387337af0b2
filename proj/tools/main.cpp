#include "printkind/cli.hpp"

int main(int argc, char** argv) { return printkind::run_cli(argc, argv); }
