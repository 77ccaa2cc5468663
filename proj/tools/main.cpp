#include "twistmom/cli.hpp"

int main(int argc, char** argv) { return twistmom::cli::main_entry(argc, argv); }
