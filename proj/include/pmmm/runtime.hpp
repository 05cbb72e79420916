#pragma once

namespace pmmm {

// Keeps large tape buffers on the heap instead of fresh mmap/munmap pairs
// every step. No-op outside glibc. Call once at the top of main().
void tune_allocator();

}  // namespace pmmm
