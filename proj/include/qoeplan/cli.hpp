#ifndef QOEPLAN_CLI_HPP
#define QOEPLAN_CLI_HPP

#include <string>
#include <vector>

namespace qoeplan {

// Entry point behind the qoeplan binary; args excludes the program name.
// Returns the process exit code: 0 only when every requested artifact was
// produced without flagged errors.
int run_cli(const std::vector<std::string>& args);

}  // namespace qoeplan

#endif
