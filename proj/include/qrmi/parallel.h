#ifndef QRMI_PARALLEL_H
#define QRMI_PARALLEL_H

#include <functional>

namespace qrmi {

/// Worker count from QRMI_THREADS (positive integer), else the hardware
/// concurrency, never below 1. Invalid values throw std::invalid_argument.
int worker_count();

/// Runs body(0), ..., body(count - 1) on up to `workers` threads. Results
/// must be written to per-index slots so the outcome does not depend on
/// scheduling. If bodies throw, the exception of the lowest index is rethrown
/// after all workers finish.
void parallel_for(int count, int workers, const std::function<void(int)> &body);

}  // namespace qrmi

#endif  // QRMI_PARALLEL_H
