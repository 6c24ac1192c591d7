#pragma once

namespace greenview::cli {

/// Parses argv and runs one subcommand. Returns 0 on success, 2 on a usage
/// error and 1 on a runtime error.
int run(int argc, char** argv);

}  // namespace greenview::cli
