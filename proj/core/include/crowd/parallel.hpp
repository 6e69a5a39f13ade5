#pragma once

namespace crowd::parallel {

// Number of worker threads used by the row-parallel loops in the kernel,
// velocity and solver modules. Results do not depend on this value: every
// output cell is accumulated in a fixed order by exactly one thread.
void set_threads(int n);
int threads();

}  // namespace crowd::parallel
