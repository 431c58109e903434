#include "sketchplay/cli.hpp"

int main(int argc, char** argv) { return sketchplay::run_cli(argc, argv); }
