#pragma once

#include <cstddef>
#include <utility>
#include <vector>

namespace bilevel::kernels {

/// Execution mode for the data-parallel sample kernels. Serial is the
/// reference implementation; Parallel uses OpenMP over contiguous row blocks
/// with the per-block partials combined in block order, so results are
/// reproducible for a fixed thread count.
enum class Mode { Serial, Parallel };

Mode mode();
void set_mode(Mode m);

/// Number of worker blocks used by the parallel kernels (1 in serial mode).
int worker_blocks();

/// Contiguous [begin, end) row range of block b out of nblocks over n rows.
inline std::pair<std::size_t, std::size_t> block_range(std::size_t n, int b,
                                                       int nblocks) {
  const std::size_t chunk = (n + nblocks - 1) / nblocks;
  const std::size_t lo = std::min(n, static_cast<std::size_t>(b) * chunk);
  const std::size_t hi = std::min(n, lo + chunk);
  return {lo, hi};
}

/// RAII guard that forces a mode for the current scope (used by tests and the
/// kernel benchmark).
class ModeGuard {
 public:
  explicit ModeGuard(Mode m) : saved_(mode()) { set_mode(m); }
  ~ModeGuard() { set_mode(saved_); }
  ModeGuard(const ModeGuard&) = delete;
  ModeGuard& operator=(const ModeGuard&) = delete;

 private:
  Mode saved_;
};

}  // namespace bilevel::kernels
