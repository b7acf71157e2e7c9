#pragma once

#include <functional>

namespace erp {

/// Worker count: hardware concurrency, capped by the ERP_THREADS environment
/// variable when set.
int worker_count();

/// Runs fn(0..n-1) across the shared pool; the caller participates, so
/// nested calls cannot deadlock. Results must be written to per-index slots
/// by the caller to keep reductions ordered. The first exception thrown by
/// any fn(i) is rethrown here.
void parallel_for(int n, const std::function<void(int)>& fn);

}  // namespace erp

namespace erp {

/// Keeps freed raster buffers in the heap instead of returning them to the
/// OS; repeated megabyte allocations otherwise pay a page fault per page.
void tune_allocator();

}  // namespace erp
