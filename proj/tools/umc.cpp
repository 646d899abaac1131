#include "umc/cli/cli.hpp"

int main(int argc, char** argv) { return umc::cli::run(argc, argv); }
