#include "greenview/cli/app.hpp"

int main(int argc, char** argv) { return greenview::cli::run(argc, argv); }
