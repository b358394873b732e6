#include "cli.hpp"

int main(int argc, char** argv) { return dmapf::cli::run(argc, argv); }
