#include "tgc/cli.hpp"

int main(int argc, char** argv) { return tgc::cli::run(argc, argv); }
