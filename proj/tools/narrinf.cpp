#include "narrinf/cli.hpp"

int main(int argc, char** argv) { return narrinf::cli::run(argc, argv); }
