#pragma once

namespace optrec {

/// Selects between the OpenMP kernels and their serial reference versions.
/// Both produce bit-identical results: parallel loops only partition
/// independent entries and never reduce across threads.
enum class Execution { Serial, Parallel };

/// Number of OpenMP threads (1 when built without OpenMP).
int max_threads();
void set_threads(int n);

}  // namespace optrec
