#include "omab/replication.hpp"

#include <exception>

#include "omab/rng.hpp"

namespace omab {

std::vector<RunResult> run_replications(
    std::size_t count, std::uint64_t master_seed, bool parallel,
    const std::function<RunResult(std::size_t, std::uint64_t)>& task) {
  std::vector<RunResult> out(count);
  std::vector<std::exception_ptr> errors(count);
  const auto n = static_cast<std::ptrdiff_t>(count);
#pragma omp parallel for schedule(dynamic, 1) if (parallel)
  for (std::ptrdiff_t r = 0; r < n; ++r) {
    try {
      out[r] = task(static_cast<std::size_t>(r),
                    replication_seed(master_seed, static_cast<std::uint64_t>(r)));
    } catch (...) {
      errors[r] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

std::vector<RunResult> run_replications(const InstanceSpec& spec, const PolicyKind& policy,
                                        std::size_t count, std::uint64_t master_seed,
                                        bool parallel, const SimOptions& options) {
  return run_replications(count, master_seed, parallel,
                          [&](std::size_t, std::uint64_t seed) {
                            return simulate(spec, policy, seed, options);
                          });
}

}  // namespace omab
