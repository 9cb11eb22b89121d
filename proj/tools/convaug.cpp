#include "convaug/cli.hpp"

int main(int argc, char** argv) { return convaug::cli::main(argc, argv); }
