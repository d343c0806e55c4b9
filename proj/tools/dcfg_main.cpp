#include "dcfg/cli.hpp"

int main(int argc, char** argv) { return dcfg::io::cli_main(argc, argv); }
