#include "bresse/cli.hpp"

int main(int argc, char** argv) { return bresse::run_cli(argc, argv); }
