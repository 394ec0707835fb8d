#include "commands.hpp"

int main(int argc, char** argv) { return cqa::cli::run(argc, argv); }
