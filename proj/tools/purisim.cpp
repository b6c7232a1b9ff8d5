#include <iostream>

#include "purisim/cli/app.h"

int main(int argc, char** argv) { return purisim::cli::run(argc, argv, std::cout, std::cerr); }
