#include "effectmap/cli.hpp"

int main(int argc, char** argv) { return effectmap::cli::run(argc, argv); }
