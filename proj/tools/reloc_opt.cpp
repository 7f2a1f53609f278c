#include "reloc/cli.hpp"

int main(int argc, char** argv) { return reloc::run_command(argc, argv); }
