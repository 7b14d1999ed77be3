#include "rdstab/cli.hpp"

int main(int argc, char** argv) { return rdstab::run_cli(argc, argv); }
