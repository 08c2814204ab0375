#pragma once

namespace grainnet {

// Number of worker threads for sample-parallel loops. 0 = hardware count,
// capped at 8. Partitioning is static so results are deterministic for a
// fixed thread count.
int runtime_threads();
void set_runtime_threads(int n);

}  // namespace grainnet
