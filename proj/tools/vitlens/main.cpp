#include "commands.hpp"

int main(int argc, char** argv) { return vitlens::cli::run_cli({argv + 1, argv + argc}); }
