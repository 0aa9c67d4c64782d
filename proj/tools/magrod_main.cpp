#include "magrod/cli.hpp"

int main(int argc, char** argv) { return magrod::cli::run(argc, argv); }
