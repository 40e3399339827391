#include "posdwell/cli.hpp"

int main(int argc, char** argv) { return posdwell::cli::main(argc, argv); }
