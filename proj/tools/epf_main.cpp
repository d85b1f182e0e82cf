#include "epf/cli.hpp"

int main(int argc, char** argv) { return epf::run_command(argc, argv); }
