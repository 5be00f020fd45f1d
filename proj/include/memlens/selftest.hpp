#pragma once

#include <iosfwd>

namespace memlens {

// Quick invariant suite over the shipped defaults; prints one line per check.
// Returns true when every check passes.
bool run_selftest(std::ostream& out);

}  // namespace memlens
