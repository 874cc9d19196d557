#include "foilmetric/cli.hpp"

int main(int argc, char** argv) { return foilmetric::cli::run(argc, argv); }
