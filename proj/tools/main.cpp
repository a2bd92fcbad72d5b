#include "dxt/cli.hpp"

int main(int argc, char** argv) { return dxt::cli::run(argc, argv); }
