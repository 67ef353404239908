#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "omab/simulation.hpp"

namespace omab {

/// Runs `task(r, replication_seed(master_seed, r))` for r = 0..count-1 and returns
/// the results in replication order. With `parallel` the tasks are spread over
/// OpenMP threads; the output is identical to the serial run. The first
/// exception (lowest r) is rethrown after all tasks finish.
std::vector<RunResult> run_replications(
    std::size_t count, std::uint64_t master_seed, bool parallel,
    const std::function<RunResult(std::size_t, std::uint64_t)>& task);

/// Same runner with a fixed instance and policy.
std::vector<RunResult> run_replications(const InstanceSpec& spec, const PolicyKind& policy,
                                        std::size_t count, std::uint64_t master_seed,
                                        bool parallel, const SimOptions& options = {});

}  // namespace omab
