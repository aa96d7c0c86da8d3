#pragma once

namespace h2h::parallel {

// Global switch for the OpenMP candidate-scoring paths. Acceptance of
// candidates is always sequential, so results are identical either way;
// the serial path exists as a reference for testing and benchmarking.
bool enabled();
void set_enabled(bool on);

}  // namespace h2h::parallel
