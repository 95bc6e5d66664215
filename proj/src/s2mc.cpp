#include "cosseg/s2mc.hpp"

#include <algorithm>
#include <charconv>
#include <map>
#include <optional>
#include <sstream>

#include <json.hpp>

#include "cosseg/evr.hpp"
#include "cosseg/rng.hpp"

namespace cosseg {

void SelectionConfig::validate() const {
    for (const auto* pool : {&s_t_pool, &n_pool}) {
        const char* name = pool == &s_t_pool ? "s_t_pool" : "n_pool";
        if (pool->empty()) throw Error(std::string("select: ") + name + " must be non-empty");
        if (!std::is_sorted(pool->begin(), pool->end()) ||
            std::adjacent_find(pool->begin(), pool->end()) != pool->end())
            throw Error(std::string("select: ") + name + " must be strictly ascending");
        if (pool->front() < 10)
            throw Error(std::string("select: ") + name +
                        " minimum is 10; smaller segments are statistically insignificant");
    }
    if (!(benchmark_accuracy > 0.0))
        throw Error("select: benchmark accuracy must be positive");
    if (n_trees < 1) throw Error("select: need at least 1 tree");
}

namespace {

struct CellOutcome {
    bool feasible = false;
    std::string warning;
    CellResult result;
    ForestModel model;
};

CellOutcome evaluate_cell(std::span<const TrafficStream> streams, int s_t, int n,
                          const SelectionConfig& cfg, ExecPolicy policy) {
    CellOutcome out;
    out.result.s_t = s_t;
    out.result.n = n;

    SegmentMatrix train;
    try {
        train = evr(streams, s_t, n, policy);
    } catch (const Error& e) {
        out.warning = "cell (s_t=" + std::to_string(s_t) + ", n=" + std::to_string(n) +
                      ") skipped: " + e.what();
        return out;
    }
    SegmentMatrix test = evr_tail(streams, s_t, n, policy);
    if (test.rows.empty()) {
        out.warning = "cell (s_t=" + std::to_string(s_t) + ", n=" + std::to_string(n) +
                      ") skipped: no test segments left";
        return out;
    }

    TrainParams params;
    params.n_trees = cfg.n_trees;
    params.seed = mix64(cfg.seed, static_cast<uint64_t>(s_t), static_cast<uint64_t>(n));
    params.policy = policy;
    TrainMeta meta;
    meta.n = n;
    meta.s_t = s_t;
    out.model = train_forest(train, params, meta);

    std::vector<int> y_true(test.rows.size());
    for (size_t i = 0; i < test.rows.size(); ++i) y_true[i] = test.rows[i].label.id;
    std::vector<int> y_pred = predict_batch(out.model, test.rows, policy);

    ConfusionMatrix cm = confusion(y_true, y_pred, out.model.classes);
    out.result.metrics = report(cm);
    out.result.accuracy = out.result.metrics.overall_accuracy;
    out.result.met_benchmark = out.result.accuracy >= cfg.benchmark_accuracy;
    out.feasible = true;
    return out;
}

} // namespace

SelectionResult select(std::span<const TrafficStream> streams, const SelectionConfig& cfg) {
    cfg.validate();
    {
        std::map<int, int> names;
        for (const TrafficStream& s : streams) names[s.label.id] = 1;
        if (names.size() < 2) throw Error("select: need at least 2 classes");
    }

    struct Cell {
        int s_t, n;
    };
    std::vector<Cell> cells;
    for (int s_t : cfg.s_t_pool)
        for (int n : cfg.n_pool) cells.push_back({s_t, n});

    SelectionResult result;
    std::vector<CellOutcome> outcomes(cells.size());

    if (cfg.full_grid && cfg.policy == ExecPolicy::Parallel) {
        // Cells are self-deterministic (per-cell seeds), so parallel evaluation
        // matches the sequential scan exactly.
#pragma omp parallel for schedule(dynamic)
        for (int64_t i = 0; i < static_cast<int64_t>(cells.size()); ++i)
            outcomes[static_cast<size_t>(i)] = evaluate_cell(
                streams, cells[static_cast<size_t>(i)].s_t, cells[static_cast<size_t>(i)].n, cfg,
                ExecPolicy::Serial);
    } else {
        for (size_t i = 0; i < cells.size(); ++i) {
            outcomes[i] = evaluate_cell(streams, cells[i].s_t, cells[i].n, cfg, cfg.policy);
            // Alg. 2 semantics: stop at the first cell that meets the benchmark.
            if (!cfg.full_grid && outcomes[i].feasible && outcomes[i].result.met_benchmark) {
                outcomes.resize(i + 1);
                break;
            }
        }
    }

    std::optional<size_t> first_hit;
    std::optional<size_t> best;
    for (size_t i = 0; i < outcomes.size(); ++i) {
        CellOutcome& o = outcomes[i];
        if (!o.feasible) {
            if (!o.warning.empty()) result.warnings.push_back(o.warning);
            continue;
        }
        result.grid.push_back(o.result);
        if (!first_hit && o.result.met_benchmark) first_hit = i;
        // loop order already prefers smaller S_T then smaller N on ties
        if (!best || o.result.accuracy > outcomes[*best].result.accuracy) best = i;
    }
    if (!best) throw Error("select: no feasible (S_T, N) cell; not enough data");

    const size_t chosen = first_hit ? *first_hit : *best;
    result.chosen_s_t = outcomes[chosen].result.s_t;
    result.chosen_n = outcomes[chosen].result.n;
    result.met_benchmark = first_hit.has_value();
    result.model = std::move(outcomes[chosen].model);
    return result;
}

namespace {

std::string format_double(double x) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, res.ptr);
}

} // namespace

std::string SelectionResult::grid_to_csv() const {
    std::ostringstream os;
    os << "s_t,n,accuracy,f1_macro,met_benchmark\n";
    for (const CellResult& c : grid)
        os << c.s_t << ',' << c.n << ',' << format_double(c.accuracy) << ','
           << format_double(c.metrics.macro_f1) << ',' << (c.met_benchmark ? 1 : 0) << '\n';
    return os.str();
}

std::string SelectionResult::grid_to_json() const {
    using nlohmann::json;
    json cells = json::array();
    for (const CellResult& c : grid) {
        json per_class = json::array();
        for (const ClassMetrics& m : c.metrics.per_class)
            per_class.push_back({{"label", m.label.name},
                                 {"support", m.support},
                                 {"accuracy", m.accuracy},
                                 {"precision", m.precision},
                                 {"recall", m.recall},
                                 {"f1", m.f1},
                                 {"fnr", m.fnr}});
        cells.push_back({{"s_t", c.s_t},
                         {"n", c.n},
                         {"accuracy", c.accuracy},
                         {"macro_f1", c.metrics.macro_f1},
                         {"weighted_f1", c.metrics.weighted_f1},
                         {"met_benchmark", c.met_benchmark},
                         {"per_class", per_class}});
    }
    json doc{{"chosen_s_t", chosen_s_t},
             {"chosen_n", chosen_n},
             {"met_benchmark", met_benchmark},
             {"cells", cells},
             {"warnings", warnings}};
    return doc.dump();
}

} // namespace cosseg
