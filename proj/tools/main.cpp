#include "mdp_tcm/cli.hpp"

int main(int argc, char** argv) { return mdp_tcm::cli::run(argc, argv); }
