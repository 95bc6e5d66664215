// End-to-end acceptance suite. Each criterion prints one PASS/FAIL line with
// its runtime; the process exits non-zero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "cosseg/evr.hpp"
#include "cosseg/forest.hpp"
#include "cosseg/ingest.hpp"
#include "cosseg/metrics.hpp"
#include "cosseg/rng.hpp"
#include "cosseg/s2mc.hpp"
#include "cosseg/synthgen.hpp"

#include "helpers.hpp"
#include "oracle_cart.hpp"
#include "oracle_stats.hpp"
#include "pcap_fixtures.hpp"

using namespace cosseg;

namespace {

int g_failures = 0;

void require(bool ok, const std::string& what) {
    if (!ok) throw Error(what);
}

void criterion(int num, const std::string& name, double time_limit_s,
               const std::function<void()>& body) {
    const auto t0 = std::chrono::steady_clock::now();
    std::string detail;
    bool ok = true;
    try {
        body();
    } catch (const std::exception& e) {
        ok = false;
        detail = e.what();
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (ok && secs > time_limit_s) {
        ok = false;
        detail = "runtime " + std::to_string(secs) + " s exceeds limit of " +
                 std::to_string(time_limit_s) + " s";
    }
    std::printf("[%s] criterion %d: %s (%.2f s)%s%s\n", ok ? "PASS" : "FAIL", num, name.c_str(),
                secs, detail.empty() ? "" : " -- ", detail.c_str());
    if (!ok) ++g_failures;
}

std::vector<TrafficStream> corpus(int packets, uint64_t seed) {
    std::vector<TrafficStream> streams;
    for (const SynthProfile& p : builtin_profiles()) streams.push_back(generate(p, packets, seed));
    return streams;
}

std::vector<TrafficStream> perturbed_corpus(int packets, double jitter, uint64_t perturb_seed,
                                            uint64_t gen_seed) {
    std::vector<TrafficStream> streams;
    for (const SynthProfile& p : builtin_profiles())
        streams.push_back(generate(perturb(p, jitter, perturb_seed), packets, gen_seed));
    return streams;
}

MetricsReport score(const ForestModel& model, const SegmentMatrix& test) {
    std::vector<int> y_true(test.rows.size());
    for (size_t i = 0; i < test.rows.size(); ++i) y_true[i] = test.rows[i].label.id;
    const std::vector<int> y_pred = predict_batch(model, test.rows);
    return report(confusion(y_true, y_pred, model.classes));
}

// ---------------------------------------------------------------------------

void evr_correctness() {
    Rng rng(1001);
    for (int trial = 0; trial < 1000; ++trial) {
        const int len = 20 + static_cast<int>(rng.next_below(280));
        const int n = 1 + static_cast<int>(rng.next_below(25));
        TrafficStream s = test::random_stream(rng.next_u64(), len);

        const auto ranges = segment(s, n);
        require(ranges.size() == static_cast<size_t>(len / n), "segment count != floor(len/n)");
        const auto vecs = vectorize_all(s, ranges);
        for (size_t i = 0; i < ranges.size(); ++i) {
            vecs[i].validate(n);
            const auto got = vecs[i].as_array();
            const auto want = test::oracle_segment_stats(s, ranges[i].begin, ranges[i].end);
            for (int f = 0; f < 11; ++f) {
                const double tol = 1e-9 * std::max(1e-12, std::fabs(want[static_cast<size_t>(f)]));
                require(std::fabs(got[static_cast<size_t>(f)] - want[static_cast<size_t>(f)]) <=
                            tol,
                        "feature " + std::to_string(f) + " deviates from the oracle");
            }
        }

        // head/tail partition of the segment list
        const int s_t = static_cast<int>(rng.next_below(ranges.size() + 1));
        std::vector<TrafficStream> one{s};
        const SegmentMatrix head = evr(one, s_t, n);
        const SegmentMatrix tail = evr_tail(one, s_t, n);
        require(head.rows.size() == static_cast<size_t>(s_t), "head size != s_t");
        require(head.rows.size() + tail.rows.size() == ranges.size(), "partition loses segments");
        for (size_t i = 0; i < ranges.size(); ++i) {
            const SegmentVector& got = i < head.rows.size()
                                           ? head.rows[i].v
                                           : tail.rows[i - head.rows.size()].v;
            require(got.as_array() == vecs[i].as_array(), "partition reorders segments");
        }
    }
}

void forest_vs_oracle() {
    Rng rng(2002);
    for (int trial = 0; trial < 50; ++trial) {
        const int n_rows = 2 + static_cast<int>(rng.next_below(11));
        std::vector<std::array<double, 11>> x;
        std::vector<int> y;
        for (int i = 0; i < n_rows; ++i) {
            std::array<double, 11> a{};
            for (int f = 0; f < 11; ++f)
                a[static_cast<size_t>(f)] = std::floor(rng.next_uniform(0.0, 4.0));
            a[8] = 1;
            a[9] = 1;
            x.push_back(a);
            y.push_back(static_cast<int>(rng.next_below(2)));
        }
        if (std::count(y.begin(), y.end(), 0) == 0) y[0] = 0;
        if (std::count(y.begin(), y.end(), 1) == 0) y[0] = 1;

        SegmentMatrix m;
        m.n = 2;
        for (int i = 0; i < n_rows; ++i)
            m.rows.push_back({SegmentVector::from_array(x[static_cast<size_t>(i)]),
                              CosLabel(y[static_cast<size_t>(i)],
                                       y[static_cast<size_t>(i)] == 0 ? "a" : "b")});

        TrainParams params;
        params.n_trees = 1;
        params.bootstrap = false;
        params.max_features = 11;
        params.seed = rng.next_u64();
        const ForestModel model = train_forest(m, params);

        const test::OracleCart oracle(x, y, 2);
        for (int i = 0; i < n_rows; ++i)
            require(predict_index(model, m.rows[static_cast<size_t>(i)].v) ==
                        oracle.predict(x[static_cast<size_t>(i)]),
                    "tree disagrees with the exhaustive CART oracle");
    }
}

void metrics_fixtures() {
    ConfusionMatrix cm;
    cm.classes = {CosLabel(0, "pos"), CosLabel(1, "neg")};
    cm.counts = {4, 1, 2, 3}; // TP=4 FN=1 FP=2 TN=3 for class 0
    const ClassMetrics m = per_class_metrics(cm, 0);
    require(m.recall == 0.8, "recall != 0.8");
    require(std::fabs(m.f1 - 0.7273) <= 1e-4, "F1 != 0.7273 +/- 1e-4");
    require(std::fabs(m.precision - 2.0 / 3.0) <= 1e-12, "precision != 2/3");
    require(m.fnr == 0.2, "FNR != 0.2");
    require(m.accuracy == 0.7, "accuracy != 0.7");

    Rng rng(3003);
    for (int trial = 0; trial < 1000; ++trial) {
        const int k = 2 + static_cast<int>(rng.next_below(5));
        ConfusionMatrix r;
        for (int i = 0; i < k; ++i) r.classes.emplace_back(i, "c" + std::to_string(i));
        r.counts.resize(static_cast<size_t>(k) * static_cast<size_t>(k));
        int64_t total = 0;
        for (int64_t& c : r.counts) total += c = static_cast<int64_t>(rng.next_below(25));
        if (total == 0) r.counts[0] = 1;
        for (int c = 0; c < k; ++c) {
            const ClassMetrics pm = per_class_metrics(r, c);
            require(std::fabs(pm.fnr + pm.recall - 1.0) <= 1e-12, "fnr + recall != 1");
        }
    }
}

constexpr uint64_t kSeedA = 42;
constexpr uint64_t kSeedB = 1337;
constexpr int kPackets = 3000;

SelectionResult run_selection() {
    SelectionConfig cfg;
    cfg.seed = kSeedA;
    cfg.benchmark_accuracy = 0.97;
    return select(corpus(kPackets, kSeedA), cfg);
}

void synthetic_end_to_end() {
    const auto streams = corpus(kPackets, kSeedA);
    const SelectionResult res = run_selection();
    require(res.met_benchmark, "selection did not meet the 0.97 benchmark");

    const SegmentMatrix tail = evr_tail(streams, res.chosen_s_t, res.chosen_n);
    const MetricsReport rep = score(res.model, tail);
    require(rep.overall_accuracy >= 0.97,
            "tail accuracy " + std::to_string(rep.overall_accuracy) + " < 0.97");

    const auto profiles = builtin_profiles();
    for (size_t i = 0; i < profiles.size(); ++i) {
        if (!profiles[i].sync) continue;
        const ClassMetrics& m = rep.per_class[i];
        require(m.fnr <= 0.05, "FNR of synchronous class '" + profiles[i].name + "' is " +
                                   std::to_string(m.fnr) + " > 0.05");
    }
}

ForestModel train_cross_model() {
    TrainParams params;
    params.seed = kSeedA;
    TrainMeta meta;
    meta.n = 20;
    meta.s_t = 50;
    meta.dataset = "corpus-A";
    return train_forest(evr(corpus(kPackets, kSeedA), 50, 20), params, meta);
}

MetricsReport cross_corpus_eval(const ForestModel& model) {
    const auto other = perturbed_corpus(kPackets, 0.15, kSeedB, kSeedB);
    return score(model, evr_tail(other, 0, 20));
}

void cross_corpus_generalization() {
    const MetricsReport rep = cross_corpus_eval(train_cross_model());
    require(rep.overall_accuracy >= 0.90,
            "cross-corpus accuracy " + std::to_string(rep.overall_accuracy) + " < 0.90");
}

void training_budget() {
    const int n = 20, s_t = 50;
    require(n * s_t == 1000, "N=20, S_T=50 must consume 1000 packets");
    const auto streams = corpus(1200, kSeedA);
    const SegmentMatrix train = evr(streams, s_t, n);
    std::map<int, int> rows_per_class;
    for (const auto& row : train.rows) rows_per_class[row.label.id]++;
    for (const auto& [cls, rows] : rows_per_class)
        require(rows * n == 1000, "class consumes != 1000 training packets");
    // the head really is the first 1000 packets of each stream
    for (const TrafficStream& s : streams) {
        const auto ranges = segment(s, n);
        require(ranges[static_cast<size_t>(s_t) - 1].end == 1000,
                "training head does not end at packet 1000");
    }
}

void determinism() {
    const SelectionResult a = run_selection();
    const SelectionResult b = run_selection();
    require(model_to_json(a.model) == model_to_json(b.model), "model files differ across runs");
    require(a.grid_to_csv() == b.grid_to_csv(), "grid CSV differs across runs");
    require(a.grid_to_json() == b.grid_to_json(), "grid JSON differs across runs");

    const auto dir = test::scratch_dir("acceptance_det");
    save_model(a.model, (dir / "a.json").string());
    save_model(b.model, (dir / "b.json").string());
    require(test::slurp(dir / "a.json") == test::slurp(dir / "b.json"),
            "model bytes differ on disk");

    const MetricsReport ra = cross_corpus_eval(train_cross_model());
    const MetricsReport rb = cross_corpus_eval(train_cross_model());
    require(report_to_json(ra) == report_to_json(rb), "metric reports differ across runs");
}

void importance_sanity() {
    const ForestModel model = train_cross_model();
    double sum = 0.0;
    for (double v : model.importances) sum += v;
    require(std::fabs(sum - 1.0) <= 1e-9, "importances do not sum to 1");

    // exactly one feature carries class signal; the rest are constant
    Rng rng(4004);
    SegmentMatrix m;
    m.n = 2;
    for (int i = 0; i < 60; ++i) {
        std::array<double, 11> a{};
        const int cls = i % 2;
        a[2] = cls == 0 ? rng.next_uniform(100.0, 110.0) : rng.next_uniform(900.0, 910.0);
        a[8] = 1;
        a[9] = 1;
        m.rows.push_back({SegmentVector::from_array(a), CosLabel(cls, cls == 0 ? "a" : "b")});
    }
    TrainParams params;
    params.seed = 5;
    const ForestModel single = train_forest(m, params);
    require(single.importances[2] > 0.9, "informative feature importance " +
                                             std::to_string(single.importances[2]) + " <= 0.9");
}

void ingestion() {
    const auto dir = test::scratch_dir("acceptance_ingest");
    const EndpointSpec client = EndpointSpec::parse("10.0.0.5");

    std::vector<TrafficStream> parsed;
    for (bool swapped : {false, true})
        for (bool nanos : {false, true}) {
            const auto path = dir / ("fix" + std::to_string(swapped) + std::to_string(nanos) +
                                     ".pcap");
            test::spit(path, test::two_frame_pcap(swapped, nanos));
            parsed.push_back(read_pcap(path.string(), client, CosLabel(0, "x")));
        }
    for (const TrafficStream& s : parsed) {
        require(s.packets.size() == 2, "golden fixture must parse to 2 records");
        require(s.packets[0].timestamp == 0.0 && s.packets[0].length == 60 &&
                    s.packets[0].direction == Direction::Uplink,
                "first record mismatch");
        require(std::fabs(s.packets[1].timestamp - 0.001) <= 1e-9 && s.packets[1].length == 1500 &&
                    s.packets[1].direction == Direction::Downlink,
                "second record mismatch");
        require(s.packets[0].timestamp == parsed[0].packets[0].timestamp &&
                    s.packets[1].timestamp == parsed[0].packets[1].timestamp,
                "fixture variants disagree");
    }

    const auto profiles = builtin_profiles();
    Rng rng(5005);
    for (int trial = 0; trial < 100; ++trial) {
        const SynthProfile& p = profiles[static_cast<size_t>(trial) % profiles.size()];
        const TrafficStream s = generate(p, 200 + static_cast<int>(rng.next_below(800)),
                                         rng.next_u64());
        const auto path = dir / "roundtrip.csv";
        write_csv(s, path.string());
        const TrafficStream back = read_csv(path.string(), s.label);
        require(back.packets.size() == s.packets.size(), "round-trip changed packet count");
        for (size_t i = 0; i < s.packets.size(); ++i)
            require(back.packets[i].timestamp == s.packets[i].timestamp &&
                        back.packets[i].length == s.packets[i].length &&
                        back.packets[i].direction == s.packets[i].direction &&
                        back.packets[i].iat == s.packets[i].iat,
                    "round-trip is not identity at packet " + std::to_string(i));
    }
}

} // namespace

int main() {
    criterion(1, "EVR matches oracle, invariants hold, head/tail partition", 5.0,
              evr_correctness);
    criterion(2, "single tree equals exhaustive CART oracle on small datasets", 10.0,
              forest_vs_oracle);
    criterion(3, "metrics match hand arithmetic; fnr + recall = 1", 5.0, metrics_fixtures);
    criterion(4, "synthetic end-to-end selection meets 0.97 with low sync-class FNR", 60.0,
              synthetic_end_to_end);
    criterion(5, "cross-corpus accuracy >= 0.90 under 15% parameter jitter", 60.0,
              cross_corpus_generalization);
    criterion(6, "N=20, S_T=50 consumes exactly 1000 training packets per class", 5.0,
              training_budget);
    criterion(7, "repeated runs are byte-identical", 120.0, determinism);
    criterion(8, "importances sum to 1; single-signal feature dominates", 30.0,
              importance_sanity);
    criterion(9, "pcap golden fixtures and CSV round-trip", 10.0, ingestion);

    if (g_failures > 0) {
        std::printf("%d criterion(s) FAILED\n", g_failures);
        return 1;
    }
    std::printf("all acceptance criteria passed\n");
    return 0;
}
