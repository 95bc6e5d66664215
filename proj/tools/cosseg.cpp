#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cosseg/evr.hpp"
#include "cosseg/forest.hpp"
#include "cosseg/ingest.hpp"
#include "cosseg/metrics.hpp"
#include "cosseg/rng.hpp"
#include "cosseg/s2mc.hpp"
#include "cosseg/synthgen.hpp"

namespace {

using namespace cosseg;

struct InputSpec {
    std::string label;
    std::string path;
};

// Inputs are `label=path` pairs; bare paths take the --label value.
std::vector<InputSpec> parse_inputs(const std::vector<std::string>& raw,
                                    const std::string& default_label) {
    std::vector<InputSpec> out;
    for (const std::string& item : raw) {
        const size_t eq = item.find('=');
        if (eq != std::string::npos && eq > 0) {
            out.push_back({item.substr(0, eq), item.substr(eq + 1)});
        } else {
            if (default_label.empty())
                throw Error("input '" + item + "' has no label; use label=path or --label");
            out.push_back({default_label, item});
        }
    }
    if (out.empty()) throw Error("no input files given");
    return out;
}

bool sniff_pcap(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open '" + path + "'");
    uint32_t magic = 0;
    in.read(reinterpret_cast<char*>(&magic), 4);
    if (in.gcount() != 4) return false;
    return magic == 0xa1b2c3d4u || magic == 0xd4c3b2a1u || magic == 0xa1b23c4du ||
           magic == 0x4d3cb2a1u;
}

std::vector<TrafficStream> read_streams(const std::vector<InputSpec>& inputs,
                                        const std::string& endpoint_text) {
    std::map<std::string, int> label_ids; // dense, in first-appearance order
    std::vector<TrafficStream> streams;
    for (const InputSpec& in : inputs) {
        auto [it, inserted] = label_ids.emplace(in.label, static_cast<int>(label_ids.size()));
        const CosLabel label(it->second, in.label);
        if (sniff_pcap(in.path)) {
            if (endpoint_text.empty())
                throw Error("pcap input '" + in.path + "' needs --endpoint <addr[/prefix]>");
            PcapSummary summary;
            streams.push_back(
                read_pcap(in.path, EndpointSpec::parse(endpoint_text), label, &summary));
            if (summary.skipped() > 0 || summary.frames_kept == 0)
                std::cerr << "warning: " << in.path << ": " << summary.to_string() << '\n';
        } else {
            streams.push_back(read_csv(in.path, label));
        }
    }
    return streams;
}

// Remaps stream labels onto the model's class table (matched by name).
void align_labels(std::vector<TrafficStream>& streams, const ForestModel& model) {
    for (TrafficStream& s : streams) {
        bool found = false;
        for (const CosLabel& c : model.classes) {
            if (c.name == s.label.name) {
                s.label = c;
                found = true;
                break;
            }
        }
        if (!found)
            throw Error("label '" + s.label.name + "' of " + s.source +
                        " is not a class of the model");
    }
}

std::string join_sources(const std::vector<InputSpec>& inputs) {
    std::string out;
    for (const InputSpec& in : inputs) {
        if (!out.empty()) out += ",";
        out += std::filesystem::path(in.path).filename().string();
    }
    return out;
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open '" + path + "' for writing");
    out << text;
    if (!out) throw Error("failed writing '" + path + "'");
}

const SynthProfile& find_profile(const std::vector<SynthProfile>& profiles,
                                 const std::string& name) {
    for (const SynthProfile& p : profiles)
        if (p.name == name) return p;
    std::string known;
    for (const SynthProfile& p : profiles) known += (known.empty() ? "" : ", ") + p.name;
    throw Error("unknown profile '" + name + "' (known: " + known + ")");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"segmented learning for class-of-service traffic classification"};
    app.require_subcommand(1);

    uint64_t seed = 0;
    app.add_option("--seed", seed, "base RNG seed")->envname("COSSEG_SEED");
    bool serial = false;
    app.add_flag("--serial", serial, "disable OpenMP kernels (serial reference path)");
    auto policy = [&] { return serial ? ExecPolicy::Serial : ExecPolicy::Parallel; };

    std::string label_flag, endpoint_flag, format = "table";
    std::vector<std::string> raw_inputs;

    // featurize ------------------------------------------------------------
    auto* featurize = app.add_subcommand("featurize", "reduce captures to a feature-matrix CSV");
    int fz_n = 20;
    std::string fz_out;
    featurize->add_option("--n", fz_n, "segment size in packets");
    featurize->add_option("--out", fz_out, "output CSV path")->required();
    featurize->add_option("--label", label_flag, "label applied to unlabelled inputs");
    featurize->add_option("--endpoint", endpoint_flag, "client address[/prefix] for pcap inputs");
    featurize->add_option("inputs", raw_inputs, "input files (label=path or path)")->required();
    featurize->callback([&] {
        auto streams = read_streams(parse_inputs(raw_inputs, label_flag), endpoint_flag);
        SegmentMatrix m = evr_tail(streams, 0, fz_n, policy());
        if (m.rows.empty()) throw Error("no complete segments produced; inputs too short?");
        write_matrix_csv(m, fz_out);
        std::cerr << "wrote " << m.rows.size() << " segment rows to " << fz_out << '\n';
    });

    // train ------------------------------------------------------------------
    auto* train = app.add_subcommand("train", "train a forest at a fixed (S_T, N)");
    int tr_n = 20, tr_s_t = 50, tr_trees = 10;
    std::string tr_out, tr_dataset;
    train->add_option("--n", tr_n, "segment size in packets");
    train->add_option("--s-t", tr_s_t, "training segments per class");
    train->add_option("--trees", tr_trees, "number of trees");
    train->add_option("--out", tr_out, "output model path")->required();
    train->add_option("--dataset", tr_dataset, "dataset tag stored in the model");
    train->add_option("--label", label_flag, "label applied to unlabelled inputs");
    train->add_option("--endpoint", endpoint_flag, "client address[/prefix] for pcap inputs");
    train->add_option("inputs", raw_inputs, "capture files, or one feature-matrix CSV")
        ->required();
    train->callback([&] {
        auto inputs = parse_inputs(raw_inputs, label_flag.empty() ? "unlabelled" : label_flag);

        SegmentMatrix matrix;
        bool from_matrix = false;
        if (inputs.size() == 1 && !sniff_pcap(inputs[0].path)) {
            std::ifstream probe(inputs[0].path, std::ios::binary);
            std::string header;
            std::getline(probe, header);
            if (!header.empty() && header.back() == '\r') header.pop_back();
            if (header.rfind("len_min,", 0) == 0) {
                matrix = read_matrix_csv(inputs[0].path);
                from_matrix = true;
            }
        }
        if (!from_matrix) {
            auto streams = read_streams(inputs, endpoint_flag);
            matrix = evr(streams, tr_s_t, tr_n, policy());
        }

        TrainParams params;
        params.n_trees = tr_trees;
        params.seed = seed;
        params.policy = policy();
        TrainMeta meta;
        meta.n = matrix.n;
        meta.s_t = from_matrix ? 0 : tr_s_t;
        meta.dataset = tr_dataset.empty() ? join_sources(inputs) : tr_dataset;
        ForestModel model = train_forest(matrix, params, meta);
        save_model(model, tr_out);
        std::cerr << "trained " << model.params.n_trees << " trees on " << matrix.rows.size()
                  << " segments (" << model.classes.size() << " classes) -> " << tr_out << '\n';
    });

    // select -----------------------------------------------------------------
    auto* sel = app.add_subcommand("select", "grid-search (S_T, N) with benchmark early stop");
    SelectionConfig cfg;
    std::string sel_out, sel_grid_csv, sel_grid_json;
    sel->add_option("--benchmark", cfg.benchmark_accuracy, "benchmark accuracy in (0,1]");
    sel->add_option("--trees", cfg.n_trees, "trees per cell");
    sel->add_option("--s-t-pool", cfg.s_t_pool, "candidate S_T values")->delimiter(',');
    sel->add_option("--n-pool", cfg.n_pool, "candidate N values")->delimiter(',');
    sel->add_flag("--full-grid", cfg.full_grid, "evaluate every cell (heat-grid reproduction)");
    sel->add_option("--out-model", sel_out, "output model path")->required();
    sel->add_option("--grid-csv", sel_grid_csv, "write the accuracy grid as CSV");
    sel->add_option("--grid-json", sel_grid_json, "write per-cell metrics as JSON");
    sel->add_option("--label", label_flag, "label applied to unlabelled inputs");
    sel->add_option("--endpoint", endpoint_flag, "client address[/prefix] for pcap inputs");
    sel->add_option("inputs", raw_inputs, "input files (label=path or path)")->required();
    sel->callback([&] {
        auto streams = read_streams(parse_inputs(raw_inputs, label_flag), endpoint_flag);
        cfg.seed = seed;
        cfg.policy = policy();
        SelectionResult res = select(streams, cfg);
        for (const std::string& w : res.warnings) std::cerr << "warning: " << w << '\n';
        save_model(res.model, sel_out);
        if (!sel_grid_csv.empty()) write_text_file(sel_grid_csv, res.grid_to_csv());
        if (!sel_grid_json.empty()) write_text_file(sel_grid_json, res.grid_to_json());
        std::cerr << "chose N=" << res.chosen_n << " S_T=" << res.chosen_s_t
                  << (res.met_benchmark ? " (benchmark met)" : " (benchmark NOT met, best cell)")
                  << " -> " << sel_out << '\n';
        if (!res.met_benchmark) std::cerr << "warning: no cell reached the benchmark accuracy\n";
    });

    // evaluate -----------------------------------------------------------------
    auto* eval = app.add_subcommand("evaluate", "score a model on labelled captures");
    std::string ev_model;
    int ev_skip = 0;
    eval->add_option("--model", ev_model, "model path")->required();
    eval->add_option("--skip", ev_skip,
                     "segments per class to skip (use the model's S_T when evaluating "
                     "the training captures)");
    eval->add_option("--format", format, "table or json")
        ->check(CLI::IsMember({"table", "json"}));
    eval->add_option("--label", label_flag, "label applied to unlabelled inputs");
    eval->add_option("--endpoint", endpoint_flag, "client address[/prefix] for pcap inputs");
    eval->add_option("inputs", raw_inputs, "input files (label=path or path)")->required();
    eval->callback([&] {
        ForestModel model = load_model(ev_model);
        auto streams = read_streams(parse_inputs(raw_inputs, label_flag), endpoint_flag);
        align_labels(streams, model);
        SegmentMatrix test = evr_tail(streams, ev_skip, model.train_meta.n, policy());
        if (test.rows.empty()) throw Error("no segments to evaluate");
        std::vector<int> y_true(test.rows.size());
        for (size_t i = 0; i < test.rows.size(); ++i) y_true[i] = test.rows[i].label.id;
        std::vector<int> y_pred = predict_batch(model, test.rows, policy());
        MetricsReport rep = report(confusion(y_true, y_pred, model.classes));
        std::cout << (format == "json" ? report_to_json(rep) + "\n" : report_to_table(rep));
    });

    // classify -----------------------------------------------------------------
    auto* cls = app.add_subcommand("classify", "label each segment of one capture");
    std::string cl_model, cl_input;
    int cl_n = 0;
    cls->add_option("--model", cl_model, "model path")->required();
    cls->add_option("--n", cl_n, "segment size (default: the model's N)");
    cls->add_option("--endpoint", endpoint_flag, "client address[/prefix] for pcap input");
    cls->add_option("input", cl_input, "capture file")->required();
    cls->callback([&] {
        ForestModel model = load_model(cl_model);
        const int n = cl_n > 0 ? cl_n : model.train_meta.n;
        if (n < 1) throw Error("model carries no segment size; pass --n");
        auto streams = read_streams({{"unlabelled", cl_input}}, endpoint_flag);
        SegmentMatrix segs = evr_tail(streams, 0, n, policy());
        std::vector<int> y_pred = predict_batch(model, segs.rows, policy());
        for (int idx : y_pred)
            std::cout << model.classes[static_cast<size_t>(idx)].name << '\n';
        std::cerr << segs.rows.size() << " segments classified\n";
    });

    // importance -----------------------------------------------------------------
    auto* imp = app.add_subcommand("importance", "per-feature importance of a model");
    std::string im_model;
    bool im_max_scaled = false;
    imp->add_option("--model", im_model, "model path")->required();
    imp->add_flag("--max-scaled", im_max_scaled, "scale so the largest importance is 1");
    imp->add_option("--format", format, "table or json")
        ->check(CLI::IsMember({"table", "json"}));
    imp->callback([&] {
        ForestModel model = load_model(im_model);
        std::array<double, kNumFeatures> values = feature_importance(model);
        if (im_max_scaled) {
            double mx = 0.0;
            for (double v : values) mx = std::max(mx, v);
            if (mx > 0.0)
                for (double& v : values) v /= mx;
        }
        auto fmt = [](double x) {
            char buf[64];
            auto res = std::to_chars(buf, buf + sizeof(buf), x);
            return std::string(buf, res.ptr);
        };
        if (format == "json") {
            std::string sep;
            std::cout << '{';
            for (int f = 0; f < kNumFeatures; ++f) {
                std::cout << sep << '"' << feature_names()[static_cast<size_t>(f)]
                          << "\":" << fmt(values[static_cast<size_t>(f)]);
                sep = ",";
            }
            std::cout << "}\n";
        } else {
            for (int f = 0; f < kNumFeatures; ++f)
                std::cout << feature_names()[static_cast<size_t>(f)] << '\t'
                          << fmt(values[static_cast<size_t>(f)]) << '\n';
        }
    });

    // synth -----------------------------------------------------------------
    auto* synth = app.add_subcommand("synth", "generate a synthetic CoS capture");
    std::string sy_profile, sy_out, sy_out_dir, sy_profiles_file;
    int sy_packets = 3000;
    double sy_jitter = 0.0;
    bool sy_list = false;
    synth->add_option("--profile", sy_profile, "profile name, or 'all'");
    synth->add_option("--packets", sy_packets, "packets to generate per stream");
    synth->add_option("--out", sy_out, "output CSV (single profile)");
    synth->add_option("--out-dir", sy_out_dir, "output directory (--profile all)");
    synth->add_option("--jitter", sy_jitter, "perturb distribution parameters by (1 +/- jitter)");
    synth->add_option("--profiles-file", sy_profiles_file, "JSON profile definitions");
    synth->add_flag("--list", sy_list, "list available profiles");
    synth->callback([&] {
        std::vector<SynthProfile> profiles =
            sy_profiles_file.empty() ? builtin_profiles() : load_profiles(sy_profiles_file);
        if (sy_list) {
            for (const SynthProfile& p : profiles)
                std::cout << p.name << '\t' << p.label.id << '\t'
                          << (p.sync ? "synchronous" : "asynchronous") << '\n';
            return;
        }
        if (sy_profile.empty()) throw Error("pass --profile <name>, --profile all, or --list");

        auto emit = [&](const SynthProfile& p, const std::string& path) {
            SynthProfile used = sy_jitter > 0.0 ? perturb(p, sy_jitter, seed) : p;
            write_csv(generate(used, sy_packets, seed), path);
            std::cerr << "wrote " << sy_packets << " packets of '" << p.name << "' to " << path
                      << '\n';
        };
        if (sy_profile == "all") {
            if (sy_out_dir.empty()) throw Error("--profile all needs --out-dir");
            std::filesystem::create_directories(sy_out_dir);
            for (const SynthProfile& p : profiles)
                emit(p, (std::filesystem::path(sy_out_dir) / (p.name + ".csv")).string());
        } else {
            if (sy_out.empty()) throw Error("--profile <name> needs --out");
            emit(find_profile(profiles, sy_profile), sy_out);
        }
    });

    // global --seed/--serial may appear after the subcommand name
    for (CLI::App* sub : app.get_subcommands([](const CLI::App*) { return true; }))
        sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const std::exception& e) {
        std::cerr << "cosseg: error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
