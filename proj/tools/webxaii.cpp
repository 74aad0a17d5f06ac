#include "webxaii/cli/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return webxaii::run_cli(argc, argv, std::cout, std::cerr); }
