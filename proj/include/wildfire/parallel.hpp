#pragma once

#include <cstddef>

namespace wildfire {

// Every data-parallel kernel takes one of these. Serial is the reference
// path the tests compare against; Parallel must produce bit-identical output.
enum class ExecPolicy { Serial, Parallel };

int max_threads();

}  // namespace wildfire
