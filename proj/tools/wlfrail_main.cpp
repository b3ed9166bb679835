#include "wlfrail/cli.hpp"

int main(int argc, char** argv) { return wlfrail::cli_main(argc, argv); }
