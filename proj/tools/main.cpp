#include "tilegraph/cli.hpp"

int main(int argc, char** argv) { return tilegraph::cli::main(argc, argv); }
