#include "mlerr/cli.hpp"

int main(int argc, char** argv) { return mlerr::cli::run(argc, argv); }
