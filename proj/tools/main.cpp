#include "deepfht/cli.hpp"

int main(int argc, char** argv) { return deepfht::cli::run(argc, argv); }
