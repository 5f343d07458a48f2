#include "binoracle/toolserver.hpp"

int main(int argc, char** argv) { return binoracle::cli_main(argc, argv); }
