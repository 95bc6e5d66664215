// Compares the OpenMP kernels against their serial reference paths on a
// generated corpus: segment vectorization, forest training, batch prediction
// and the full selection grid. Results must be identical; only time differs.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cosseg/evr.hpp"
#include "cosseg/forest.hpp"
#include "cosseg/s2mc.hpp"
#include "cosseg/synthgen.hpp"

using namespace cosseg;

namespace {

double time_ms(const std::function<void()>& fn, int repeat) {
    double best = 1e300;
    for (int r = 0; r < repeat; ++r) {
        const auto t0 = std::chrono::steady_clock::now();
        fn();
        const auto t1 = std::chrono::steady_clock::now();
        best = std::min(best, std::chrono::duration<double, std::milli>(t1 - t0).count());
    }
    return best;
}

void row(const char* name, double serial_ms, double parallel_ms, bool equal) {
    std::printf("%-22s %10.1f ms %10.1f ms %8.2fx   %s\n", name, serial_ms, parallel_ms,
                serial_ms / parallel_ms, equal ? "identical" : "MISMATCH");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"serial vs OpenMP kernel benchmark"};
    int packets = 60000;
    int trees = 40;
    int repeat = 3;
    uint64_t seed = 7;
    app.add_option("--packets", packets, "packets per class");
    app.add_option("--trees", trees, "trees for the training benchmark");
    app.add_option("--repeat", repeat, "repetitions (best-of)");
    app.add_option("--seed", seed, "corpus seed");
    CLI11_PARSE(app, argc, argv);

    std::printf("threads available: %d\n", max_threads());
    std::printf("%-22s %13s %13s %9s\n", "kernel", "serial", "openmp", "speedup");

    std::vector<TrafficStream> streams;
    for (const SynthProfile& p : builtin_profiles()) streams.push_back(generate(p, packets, seed));

    // vectorize: all segments of every stream at N = 20
    std::vector<std::vector<SegmentRange>> ranges;
    for (const TrafficStream& s : streams) ranges.push_back(segment(s, 20));
    std::vector<std::vector<SegmentVector>> vec_serial, vec_parallel;
    const double v_s = time_ms(
        [&] {
            vec_serial.clear();
            for (size_t i = 0; i < streams.size(); ++i)
                vec_serial.push_back(vectorize_all(streams[i], ranges[i], ExecPolicy::Serial));
        },
        repeat);
    const double v_p = time_ms(
        [&] {
            vec_parallel.clear();
            for (size_t i = 0; i < streams.size(); ++i)
                vec_parallel.push_back(vectorize_all(streams[i], ranges[i], ExecPolicy::Parallel));
        },
        repeat);
    bool v_eq = true;
    for (size_t i = 0; i < vec_serial.size(); ++i)
        for (size_t j = 0; j < vec_serial[i].size(); ++j)
            v_eq &= vec_serial[i][j].as_array() == vec_parallel[i][j].as_array();
    row("vectorize", v_s, v_p, v_eq);

    // training: one forest on every complete segment
    SegmentMatrix matrix = evr_tail(streams, 0, 20, ExecPolicy::Parallel);
    TrainParams params;
    params.n_trees = trees;
    params.seed = seed;
    ForestModel m_serial, m_parallel;
    const double t_s = time_ms(
        [&] {
            params.policy = ExecPolicy::Serial;
            m_serial = train_forest(matrix, params);
        },
        repeat);
    const double t_p = time_ms(
        [&] {
            params.policy = ExecPolicy::Parallel;
            m_parallel = train_forest(matrix, params);
        },
        repeat);
    row("train_forest", t_s, t_p, model_to_json(m_serial) == model_to_json(m_parallel));

    // prediction over the whole matrix
    std::vector<int> pred_serial, pred_parallel;
    const double p_s = time_ms(
        [&] { pred_serial = predict_batch(m_serial, matrix.rows, ExecPolicy::Serial); }, repeat);
    const double p_p = time_ms(
        [&] { pred_parallel = predict_batch(m_serial, matrix.rows, ExecPolicy::Parallel); },
        repeat);
    row("predict_batch", p_s, p_p, pred_serial == pred_parallel);

    // full selection grid (cells in parallel)
    SelectionConfig cfg;
    cfg.seed = seed;
    cfg.full_grid = true;
    cfg.benchmark_accuracy = 2.0; // never met: every cell is evaluated
    SelectionResult g_serial, g_parallel;
    const double g_s = time_ms(
        [&] {
            cfg.policy = ExecPolicy::Serial;
            g_serial = select(streams, cfg);
        },
        1);
    const double g_p = time_ms(
        [&] {
            cfg.policy = ExecPolicy::Parallel;
            g_parallel = select(streams, cfg);
        },
        1);
    row("select --full-grid", g_s, g_p, g_serial.grid_to_csv() == g_parallel.grid_to_csv());

    return 0;
}
