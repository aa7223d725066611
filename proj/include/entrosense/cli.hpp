#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace entrosense {

/// Entry point of the `entrosense` tool. `args` excludes the program name.
/// CSV goes to --out when given, otherwise to `out`; diagnostics go to `err`.
/// Returns 0 on success, 1 on config/runtime errors, 2 on usage errors.
int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace entrosense
