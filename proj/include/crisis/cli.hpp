#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace crisis {

// In-process entry point behind main(); tests call it directly to capture
// output. args excludes the program name. Returns the process exit status.
int dispatch(const std::vector<std::string>& args, std::ostream& out,
             std::ostream& err);

}  // namespace crisis
