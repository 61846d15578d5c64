#include "lsgfn/cli.hpp"

int main(int argc, char** argv) { return lsgfn::cli::run_cli(argc, argv); }
