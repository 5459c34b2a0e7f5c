#include "flexsc/cli/cli.hpp"

int main(int argc, char** argv) { return flexsc::cli_main(argc, argv); }
