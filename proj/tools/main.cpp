#include "rhsmm/cli.hpp"

int main(int argc, char** argv) { return rhsmm::cli_dispatch(argc, argv); }
