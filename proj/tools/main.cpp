#include "cli.hpp"

int main(int argc, char** argv) { return filcon::cli::run(argc, argv); }
