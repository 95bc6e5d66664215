#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cosseg/exec.hpp"
#include "cosseg/forest.hpp"
#include "cosseg/metrics.hpp"
#include "cosseg/traffic.hpp"

namespace cosseg {

struct SelectionConfig {
    std::vector<int> s_t_pool{10, 20, 30, 40, 50};
    std::vector<int> n_pool{10, 20, 30, 40, 50};
    // Values above 1 are legal and simply unreachable (benchmark never fires).
    double benchmark_accuracy = 0.97;
    int n_trees = 10;
    uint64_t seed = 0;
    // Evaluate every cell instead of returning at the first benchmark hit;
    // reproduces full accuracy heat grids. The chosen cell is unchanged.
    bool full_grid = false;
    ExecPolicy policy = ExecPolicy::Parallel;

    void validate() const;
};

struct CellResult {
    int s_t = 0;
    int n = 0;
    double accuracy = 0.0;
    bool met_benchmark = false;
    MetricsReport metrics;
};

struct SelectionResult {
    int chosen_s_t = 0;
    int chosen_n = 0;
    bool met_benchmark = false;
    ForestModel model;
    std::vector<CellResult> grid;      // evaluated cells in loop order
    std::vector<std::string> warnings; // skipped infeasible cells etc.

    // Grid report CSV: s_t,n,accuracy,f1_macro,met_benchmark
    std::string grid_to_csv() const;
    // Full per-cell reports including per-class metrics.
    std::string grid_to_json() const;
};

// Algorithm: S_T ascending (outer) x N ascending (inner); per cell the head
// s_t segments per class train a forest that is scored on the remaining
// segments. Returns at the first cell whose test accuracy reaches the
// benchmark; if none does, the best cell is returned with met_benchmark =
// false (ties prefer smaller S_T, then smaller N). Each cell derives its own
// seed from (seed, S_T, N), so any evaluation order gives identical results.
SelectionResult select(std::span<const TrafficStream> streams, const SelectionConfig& cfg);

} // namespace cosseg
