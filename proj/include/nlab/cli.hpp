#ifndef NLAB_CLI_HPP
#define NLAB_CLI_HPP

namespace nlab {

// Full command-line surface of the artifact binary.  Returns the process
// exit code: 0 success, 1 usage or config error, 2 iteration limit reached,
// 3 contraction failure, 4 divergent tail.
int run_cli(int argc, const char* const* argv);

}  // namespace nlab

#endif  // NLAB_CLI_HPP
