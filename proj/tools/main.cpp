#include "cli.hpp"

int main(int argc, char** argv) { return newsrisk::run_cli(argc, argv); }
