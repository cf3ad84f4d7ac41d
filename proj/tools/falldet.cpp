#include "falldet/cli.hpp"

int main(int argc, char** argv) { return falldet::cli::run(argc, argv); }
