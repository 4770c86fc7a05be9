#include "costorm/cli.hpp"

int main(int argc, char** argv) { return costorm::run_cli(argc, argv); }
