#include <iostream>

#include "mkinf/cli.hpp"

int main(int argc, char** argv) { return mkinf::cli::main_entry(argc, argv, std::cout, std::cerr); }
