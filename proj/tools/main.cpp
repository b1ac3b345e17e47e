#include "commands.hpp"

int main(int argc, char** argv) { return hipexo::cli::run(argc, argv); }
