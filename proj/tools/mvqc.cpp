#include "mvqc/cli.hpp"

int main(int argc, char** argv) { return mvqc::cli::main_entry(argc, argv); }
