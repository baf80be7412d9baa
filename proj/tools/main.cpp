#include "airlift/cli.hpp"

int main(int argc, char** argv) { return airlift::cli::run(argc, argv); }
