#include "charmt/cli.hpp"

int main(int argc, char** argv) { return charmt::cli::run(argc, argv); }
