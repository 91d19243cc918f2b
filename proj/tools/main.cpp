#include "arhgls/cli.hpp"

int main(int argc, char** argv) { return arhgls::cli_main(argc, argv); }
