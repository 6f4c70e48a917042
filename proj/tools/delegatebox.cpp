#include "delegatebox/cli.hpp"

int main(int argc, char** argv) { return delegatebox::cli::main(argc, argv); }
