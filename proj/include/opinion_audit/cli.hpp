#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace opinion_audit {

/// Runs the command line. `args` excludes the program name.
/// Returns 0 on success, 1 on a usage error and 2 on a data error.
int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int cli_main(int argc, char** argv);

}  // namespace opinion_audit
