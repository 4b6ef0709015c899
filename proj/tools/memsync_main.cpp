#include <iostream>

#include "memsync/cli.hpp"

int main(int argc, char** argv) { return memsync::cli::dispatch(argc, argv, std::cout, std::cerr); }
