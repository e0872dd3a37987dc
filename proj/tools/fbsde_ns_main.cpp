#include "fbsde_ns/harness.hpp"

int main(int argc, char** argv) { return fbsde::run_cli(argc, argv); }
