#pragma once

#include <iosfwd>

namespace optree {

/// Entry point of the `optree` tool. Returns 0 on success, 1 on user
/// errors (bad arguments, unknown persona, unplannable question) and 2 on
/// internal errors.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace optree
