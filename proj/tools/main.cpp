#include "runner.hpp"

int main(int argc, char** argv) { return bratteli::cli::main_entry(argc, argv); }
