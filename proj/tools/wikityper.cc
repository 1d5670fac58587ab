#include "wikityper/cli.h"

int main(int argc, char** argv) { return wikityper::cli::run(argc, argv); }
