#include "styleprof/cli.hpp"

int main(int argc, char** argv) { return styleprof::cli::run(argc, argv); }
