#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <vector>

#include "cosseg/evr.hpp"
#include "cosseg/s2mc.hpp"
#include "cosseg/synthgen.hpp"

#include "helpers.hpp"

using namespace cosseg;

namespace {

std::vector<TrafficStream> corpus(int packets, uint64_t seed) {
    std::vector<TrafficStream> streams;
    for (const SynthProfile& p : builtin_profiles()) streams.push_back(generate(p, packets, seed));
    return streams;
}

} // namespace

TEST_CASE("config validation") {
    SelectionConfig cfg;
    CHECK_NOTHROW(cfg.validate());

    SUBCASE("empty pool") {
        cfg.n_pool.clear();
        CHECK_THROWS_AS(cfg.validate(), Error);
    }
    SUBCASE("descending pool") {
        cfg.s_t_pool = {20, 10};
        CHECK_THROWS_AS(cfg.validate(), Error);
    }
    SUBCASE("pool values below 10") {
        cfg.n_pool = {5, 10};
        CHECK_THROWS_AS(cfg.validate(), Error);
    }
    SUBCASE("non-positive benchmark") {
        cfg.benchmark_accuracy = 0.0;
        CHECK_THROWS_AS(cfg.validate(), Error);
    }
}

TEST_CASE("well-separated corpus meets the benchmark at the first cell") {
    auto streams = corpus(3000, 42);
    SelectionConfig cfg;
    cfg.seed = 42;
    SelectionResult res = select(streams, cfg);

    CHECK(res.met_benchmark);
    CHECK(res.chosen_s_t == 10);
    CHECK(res.chosen_n == 10);
    REQUIRE(res.grid.size() == 1); // stopped at the first cell
    CHECK(res.grid[0].accuracy >= 0.97);
    CHECK(res.model.train_meta.n == 10);
    CHECK(res.model.train_meta.s_t == 10);

    SUBCASE("every cell before the chosen one is below the benchmark") {
        for (size_t i = 0; i + 1 < res.grid.size(); ++i)
            CHECK(res.grid[i].accuracy < cfg.benchmark_accuracy);
    }
}

TEST_CASE("unreachable benchmark returns the argmax cell") {
    auto streams = corpus(1500, 7);
    SelectionConfig cfg;
    cfg.seed = 7;
    cfg.benchmark_accuracy = 1.01;
    SelectionResult res = select(streams, cfg);

    CHECK_FALSE(res.met_benchmark);
    double best = -1.0;
    for (const CellResult& c : res.grid) best = std::max(best, c.accuracy);
    bool found_chosen = false;
    for (const CellResult& c : res.grid)
        if (c.s_t == res.chosen_s_t && c.n == res.chosen_n) {
            CHECK(c.accuracy == best);
            found_chosen = true;
        }
    CHECK(found_chosen);
    // infeasible cells at 1500 packets (e.g. S_T=50, N=50 needs 2500) warn
    CHECK_FALSE(res.warnings.empty());
}

TEST_CASE("full grid evaluates every feasible cell and picks the same point") {
    auto streams = corpus(3000, 42);
    SelectionConfig first_hit;
    first_hit.seed = 42;
    SelectionConfig full = first_hit;
    full.full_grid = true;

    SelectionResult a = select(streams, first_hit);
    SelectionResult b = select(streams, full);
    CHECK(b.grid.size() == 25); // all 5x5 cells feasible at 3000 packets
    CHECK(a.chosen_s_t == b.chosen_s_t);
    CHECK(a.chosen_n == b.chosen_n);
    CHECK(a.met_benchmark == b.met_benchmark);
    CHECK(model_to_json(a.model) == model_to_json(b.model));

    SUBCASE("grid cells are independent of evaluation order") {
        // the first-hit run's single cell must appear identical in the grid
        CHECK(b.grid[0].accuracy == a.grid[0].accuracy);
    }
    SUBCASE("grid reports serialize") {
        const std::string csv = b.grid_to_csv();
        CHECK(csv.rfind("s_t,n,accuracy,f1_macro,met_benchmark\n", 0) == 0);
        CHECK(std::count(csv.begin(), csv.end(), '\n') == 26); // header + 25 cells
        CHECK(b.grid_to_json().find("\"chosen_n\"") != std::string::npos);
    }
}

TEST_CASE("chosen training budget in packets is s_t * n") {
    auto streams = corpus(3000, 42);
    SelectionConfig cfg;
    cfg.seed = 42;
    SelectionResult res = select(streams, cfg);
    // the training matrix consumed the head s_t segments of n packets per class
    SegmentMatrix train = evr(streams, res.chosen_s_t, res.chosen_n);
    CHECK(static_cast<int>(train.rows.size()) ==
          res.chosen_s_t * static_cast<int>(builtin_profiles().size()));
}

TEST_CASE("select rejects degenerate inputs") {
    SUBCASE("single class") {
        std::vector<TrafficStream> one;
        one.push_back(generate(builtin_profiles()[0], 1000, 1));
        SelectionConfig cfg;
        CHECK_THROWS_AS(select(one, cfg), Error);
    }
    SUBCASE("no feasible cell") {
        auto streams = corpus(80, 3); // far too short for any (s_t, n) cell
        SelectionConfig cfg;
        CHECK_THROWS_AS(select(streams, cfg), Error);
    }
}
