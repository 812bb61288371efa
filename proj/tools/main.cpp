#include "rgm/cli.hpp"

int main(int argc, char** argv) { return rgm::run_cli(argc, argv); }
