#include "reentry/cli.hpp"

int main(int argc, char** argv) { return reentry::cli::run(argc, argv); }
