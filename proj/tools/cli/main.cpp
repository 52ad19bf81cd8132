#include "run.hpp"

int main(int argc, char** argv) { return dimdecomp::cli::main_entry(argc, argv); }
