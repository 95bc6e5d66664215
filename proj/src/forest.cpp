#include "cosseg/forest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "cosseg/rng.hpp"

namespace cosseg {

double gini(std::span<const int64_t> class_counts) {
    int64_t total = 0;
    for (int64_t c : class_counts) {
        if (c < 0) throw Error("gini: negative class count");
        total += c;
    }
    if (total < 1) throw Error("gini: empty class counts");
    double sum_sq = 0.0;
    for (int64_t c : class_counts) {
        const double p = static_cast<double>(c) / static_cast<double>(total);
        sum_sq += p * p;
    }
    return 1.0 - sum_sq;
}

std::optional<Split> best_split(std::span<const std::array<double, kNumFeatures>> x,
                                std::span<const int> y, int n_classes,
                                std::span<const int> rows, std::span<const int> features) {
    const size_t n = rows.size();
    if (n < 2) return std::nullopt;

    std::vector<int64_t> parent_counts(static_cast<size_t>(n_classes), 0);
    for (int r : rows) parent_counts[static_cast<size_t>(y[static_cast<size_t>(r)])]++;
    const double parent_gini = gini(parent_counts);
    const double dn = static_cast<double>(n);

    // ascending feature order makes the first strict improvement the
    // tie-break winner (lower feature index, then lower threshold)
    std::vector<int> feats(features.begin(), features.end());
    std::sort(feats.begin(), feats.end());

    std::optional<Split> best;
    std::vector<int> order(rows.begin(), rows.end());
    std::vector<int64_t> left(static_cast<size_t>(n_classes));
    std::vector<int64_t> right(static_cast<size_t>(n_classes));

    for (int f : feats) {
        std::sort(order.begin(), order.end(), [&](int a, int b) {
            return x[static_cast<size_t>(a)][static_cast<size_t>(f)] <
                   x[static_cast<size_t>(b)][static_cast<size_t>(f)];
        });
        std::fill(left.begin(), left.end(), 0);
        right = parent_counts;

        for (size_t i = 0; i + 1 < n; ++i) {
            const int cls = y[static_cast<size_t>(order[i])];
            left[static_cast<size_t>(cls)]++;
            right[static_cast<size_t>(cls)]--;
            const double v = x[static_cast<size_t>(order[i])][static_cast<size_t>(f)];
            const double next = x[static_cast<size_t>(order[i + 1])][static_cast<size_t>(f)];
            if (v == next) continue;
            const double threshold = (v + next) / 2.0;
            // keep routing consistent with the sweep when the midpoint rounds
            // onto one of the neighbouring values
            if (!(threshold > v) || !(threshold < next)) continue;

            const double nl = static_cast<double>(i + 1);
            const double nr = dn - nl;
            const double weighted = (nl / dn) * gini(left) + (nr / dn) * gini(right);
            const double decrease = parent_gini - weighted;
            if (decrease > 0.0 && (!best || decrease > best->decrease))
                best = Split{f, threshold, decrease};
        }
    }
    return best;
}

std::vector<int> bootstrap_indices(uint64_t seed, int tree_index, int n_rows) {
    Rng rng(mix64(seed, static_cast<uint64_t>(tree_index), 0xb007u));
    std::vector<int> idx(static_cast<size_t>(n_rows));
    for (int& i : idx) i = static_cast<int>(rng.next_below(static_cast<uint64_t>(n_rows)));
    return idx;
}

namespace {

struct TreeBuilder {
    std::span<const std::array<double, kNumFeatures>> x;
    std::span<const int> y;
    int n_classes;
    const TrainParams& params;
    Rng rng;
    Tree tree;

    std::vector<int> sample_features() {
        if (params.max_features >= kNumFeatures) {
            std::vector<int> all(kNumFeatures);
            std::iota(all.begin(), all.end(), 0);
            return all;
        }
        std::array<int, kNumFeatures> pool;
        std::iota(pool.begin(), pool.end(), 0);
        const int k = std::max(1, params.max_features);
        for (int i = 0; i < k; ++i) {
            const int j = i + static_cast<int>(rng.next_below(static_cast<uint64_t>(kNumFeatures - i)));
            std::swap(pool[static_cast<size_t>(i)], pool[static_cast<size_t>(j)]);
        }
        std::vector<int> subset(pool.begin(), pool.begin() + k);
        std::sort(subset.begin(), subset.end());
        return subset;
    }

    int build(std::vector<int>& rows) {
        std::vector<int64_t> counts(static_cast<size_t>(n_classes), 0);
        for (int r : rows) counts[static_cast<size_t>(y[static_cast<size_t>(r)])]++;
        int nonzero = 0;
        for (int64_t c : counts) nonzero += c > 0;

        const int node_idx = static_cast<int>(tree.nodes.size());
        tree.nodes.emplace_back();

        std::optional<Split> split;
        if (nonzero > 1 && static_cast<int>(rows.size()) >= params.min_samples_split) {
            const std::vector<int> feats = sample_features();
            split = best_split(x, y, n_classes, rows, feats);
        }
        if (!split) {
            tree.nodes[static_cast<size_t>(node_idx)].class_counts = std::move(counts);
            return node_idx;
        }

        std::vector<int> left_rows, right_rows;
        left_rows.reserve(rows.size());
        right_rows.reserve(rows.size());
        for (int r : rows)
            if (x[static_cast<size_t>(r)][static_cast<size_t>(split->feature)] <= split->threshold)
                left_rows.push_back(r);
            else
                right_rows.push_back(r);
        rows.clear();
        rows.shrink_to_fit();

        const int left_idx = build(left_rows);
        const int right_idx = build(right_rows);
        TreeNode& node = tree.nodes[static_cast<size_t>(node_idx)];
        node.feature = split->feature;
        node.threshold = split->threshold;
        node.left = left_idx;
        node.right = right_idx;
        return node_idx;
    }
};

Tree train_one_tree(std::span<const std::array<double, kNumFeatures>> x, std::span<const int> y,
                    int n_classes, const TrainParams& params, int tree_index) {
    std::vector<int> rows;
    if (params.bootstrap) {
        rows = bootstrap_indices(params.seed, tree_index, static_cast<int>(x.size()));
    } else {
        rows.resize(x.size());
        std::iota(rows.begin(), rows.end(), 0);
    }
    TreeBuilder builder{x, y, n_classes, params,
                        Rng(mix64(params.seed, static_cast<uint64_t>(tree_index), 0x5eedu)), {}};
    builder.build(rows);
    return std::move(builder.tree);
}

} // namespace

ForestModel train_forest(const SegmentMatrix& matrix, const TrainParams& params,
                         const TrainMeta& meta) {
    if (matrix.rows.size() < 2)
        throw Error("train_forest: need at least 2 rows, got " + std::to_string(matrix.rows.size()));
    if (params.n_trees < 1) throw Error("train_forest: need at least 1 tree");

    ForestModel model;
    model.classes = matrix.classes();
    if (model.classes.size() < 2)
        throw Error("train_forest: need at least 2 classes, got " +
                    std::to_string(model.classes.size()));
    model.params = params;
    model.train_meta = meta;
    if (model.train_meta.n == 0) model.train_meta.n = matrix.n;
    model.train_meta.seed = params.seed;

    std::vector<std::array<double, kNumFeatures>> x(matrix.rows.size());
    std::vector<int> y(matrix.rows.size());
    for (size_t i = 0; i < matrix.rows.size(); ++i) {
        x[i] = matrix.rows[i].v.as_array();
        y[i] = matrix.rows[i].label.id;
    }
    const int n_classes = static_cast<int>(model.classes.size());

    model.trees.resize(static_cast<size_t>(params.n_trees));
    if (params.policy == ExecPolicy::Parallel) {
#pragma omp parallel for schedule(dynamic)
        for (int t = 0; t < params.n_trees; ++t)
            model.trees[static_cast<size_t>(t)] = train_one_tree(x, y, n_classes, params, t);
    } else {
        for (int t = 0; t < params.n_trees; ++t)
            model.trees[static_cast<size_t>(t)] = train_one_tree(x, y, n_classes, params, t);
    }

    model.importances = feature_importance(model);
    return model;
}

namespace {

int leaf_majority(const TreeNode& leaf) {
    auto it = std::max_element(leaf.class_counts.begin(), leaf.class_counts.end());
    return static_cast<int>(it - leaf.class_counts.begin());
}

int tree_predict(const Tree& tree, const std::array<double, kNumFeatures>& v) {
    const TreeNode* node = &tree.nodes.front();
    while (!node->is_leaf()) {
        const int next = v[static_cast<size_t>(node->feature)] <= node->threshold ? node->left
                                                                                  : node->right;
        node = &tree.nodes[static_cast<size_t>(next)];
    }
    return leaf_majority(*node);
}

} // namespace

int predict_index(const ForestModel& model, const SegmentVector& v) {
    if (model.trees.empty()) throw Error("predict: model has no trees");
    const auto a = v.as_array();
    std::vector<int> votes(model.classes.size(), 0);
    for (const Tree& t : model.trees) votes[static_cast<size_t>(tree_predict(t, a))]++;
    auto it = std::max_element(votes.begin(), votes.end());
    return static_cast<int>(it - votes.begin());
}

CosLabel predict(const ForestModel& model, const SegmentVector& v) {
    return model.classes[static_cast<size_t>(predict_index(model, v))];
}

std::vector<int> predict_batch(const ForestModel& model,
                               std::span<const SegmentMatrix::Row> rows, ExecPolicy policy) {
    std::vector<int> out(rows.size());
    if (policy == ExecPolicy::Parallel) {
#pragma omp parallel for schedule(static)
        for (int64_t i = 0; i < static_cast<int64_t>(rows.size()); ++i)
            out[static_cast<size_t>(i)] = predict_index(model, rows[static_cast<size_t>(i)].v);
    } else {
        for (size_t i = 0; i < rows.size(); ++i) out[i] = predict_index(model, rows[i].v);
    }
    return out;
}

namespace {

// Returns the class counts reaching `idx`, accumulating weighted impurity
// decreases of internal nodes into `imp`.
std::vector<int64_t> mdi_walk(const Tree& tree, int idx, double n_root,
                              std::array<double, kNumFeatures>& imp) {
    const TreeNode& node = tree.nodes[static_cast<size_t>(idx)];
    if (node.is_leaf()) return node.class_counts;

    std::vector<int64_t> left = mdi_walk(tree, node.left, n_root, imp);
    std::vector<int64_t> right = mdi_walk(tree, node.right, n_root, imp);
    std::vector<int64_t> counts(left.size());
    for (size_t k = 0; k < counts.size(); ++k) counts[k] = left[k] + right[k];

    const double n_node = static_cast<double>(std::accumulate(counts.begin(), counts.end(), int64_t{0}));
    const double nl = static_cast<double>(std::accumulate(left.begin(), left.end(), int64_t{0}));
    const double nr = n_node - nl;
    const double decrease =
        gini(counts) - (nl / n_node) * gini(left) - (nr / n_node) * gini(right);
    imp[static_cast<size_t>(node.feature)] += (n_node / n_root) * decrease;
    return counts;
}

int64_t tree_root_samples(const Tree& tree) {
    int64_t total = 0;
    for (const TreeNode& n : tree.nodes)
        if (n.is_leaf())
            total += std::accumulate(n.class_counts.begin(), n.class_counts.end(), int64_t{0});
    return total;
}

} // namespace

std::array<double, kNumFeatures> feature_importance(const ForestModel& model) {
    if (model.trees.empty()) throw Error("feature_importance: model has no trees");

    std::array<double, kNumFeatures> total{};
    for (const Tree& tree : model.trees) {
        std::array<double, kNumFeatures> imp{};
        mdi_walk(tree, 0, static_cast<double>(tree_root_samples(tree)), imp);
        double sum = 0.0;
        for (double v : imp) sum += v;
        if (sum > 0.0)
            for (size_t f = 0; f < imp.size(); ++f) total[f] += imp[f] / sum;
    }
    double sum = 0.0;
    for (double v : total) sum += v;
    if (sum > 0.0)
        for (double& v : total) v /= sum;
    return total;
}

// ---------------------------------------------------------------------------
// persistence
// ---------------------------------------------------------------------------

namespace {

using nlohmann::json;

constexpr int kModelVersion = 1;

json node_to_json(const Tree& tree, int idx) {
    const TreeNode& node = tree.nodes[static_cast<size_t>(idx)];
    if (node.is_leaf()) return json{{"counts", node.class_counts}};
    return json{{"feature", node.feature},
                {"threshold", node.threshold},
                {"left", node_to_json(tree, node.left)},
                {"right", node_to_json(tree, node.right)}};
}

int node_from_json(const json& j, Tree& tree, size_t n_classes) {
    const int idx = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    if (j.contains("counts")) {
        auto counts = j.at("counts").get<std::vector<int64_t>>();
        if (counts.size() != n_classes)
            throw Error("model: leaf count vector length " + std::to_string(counts.size()) +
                        " does not match class count " + std::to_string(n_classes));
        tree.nodes[static_cast<size_t>(idx)].class_counts = std::move(counts);
        return idx;
    }
    const int feature = j.at("feature").get<int>();
    if (feature < 0 || feature >= kNumFeatures)
        throw Error("model: split feature index " + std::to_string(feature) + " out of range");
    const double threshold = j.at("threshold").get<double>();
    const int left = node_from_json(j.at("left"), tree, n_classes);
    const int right = node_from_json(j.at("right"), tree, n_classes);
    TreeNode& node = tree.nodes[static_cast<size_t>(idx)];
    node.feature = feature;
    node.threshold = threshold;
    node.left = left;
    node.right = right;
    return idx;
}

} // namespace

std::string model_to_json(const ForestModel& model) {
    json classes = json::array();
    for (const CosLabel& c : model.classes) classes.push_back({{"id", c.id}, {"name", c.name}});

    json trees = json::array();
    for (const Tree& t : model.trees) trees.push_back(node_to_json(t, 0));

    json doc{{"version", kModelVersion},
             {"n_features", model.n_features},
             {"classes", classes},
             {"params",
              {{"n_trees", model.params.n_trees},
               {"seed", model.params.seed},
               {"max_features", model.params.max_features},
               {"min_samples_split", model.params.min_samples_split},
               {"bootstrap", model.params.bootstrap}}},
             {"importances", model.importances},
             {"train_meta",
              {{"n", model.train_meta.n},
               {"s_t", model.train_meta.s_t},
               {"seed", model.train_meta.seed},
               {"dataset", model.train_meta.dataset}}},
             {"trees", trees}};
    return doc.dump();
}

ForestModel model_from_json(const std::string& text, const std::string& origin) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw Error(origin + ": corrupt model file: " + e.what());
    }

    try {
        const int version = doc.at("version").get<int>();
        if (version != kModelVersion)
            throw Error(origin + ": unsupported model version " + std::to_string(version) +
                        " (supported: " + std::to_string(kModelVersion) + ")");

        ForestModel model;
        model.n_features = doc.at("n_features").get<int>();
        if (model.n_features != kNumFeatures)
            throw Error(origin + ": model has " + std::to_string(model.n_features) +
                        " features, this build expects " + std::to_string(kNumFeatures));

        for (const json& jc : doc.at("classes"))
            model.classes.emplace_back(jc.at("id").get<int>(), jc.at("name").get<std::string>());
        for (size_t i = 0; i < model.classes.size(); ++i)
            if (model.classes[i].id != static_cast<int>(i))
                throw Error(origin + ": class ids are not dense 0..K-1");
        if (model.classes.empty()) throw Error(origin + ": model has no classes");

        const json& jp = doc.at("params");
        model.params.n_trees = jp.at("n_trees").get<int>();
        model.params.seed = jp.at("seed").get<uint64_t>();
        model.params.max_features = jp.at("max_features").get<int>();
        model.params.min_samples_split = jp.value("min_samples_split", 2);
        model.params.bootstrap = jp.value("bootstrap", true);

        const auto imps = doc.at("importances").get<std::vector<double>>();
        if (imps.size() != kNumFeatures)
            throw Error(origin + ": importances vector has wrong length");
        std::copy(imps.begin(), imps.end(), model.importances.begin());

        const json& jm = doc.at("train_meta");
        model.train_meta.n = jm.at("n").get<int>();
        model.train_meta.s_t = jm.at("s_t").get<int>();
        model.train_meta.seed = jm.at("seed").get<uint64_t>();
        model.train_meta.dataset = jm.at("dataset").get<std::string>();

        for (const json& jt : doc.at("trees")) {
            Tree tree;
            node_from_json(jt, tree, model.classes.size());
            model.trees.push_back(std::move(tree));
        }
        if (model.trees.empty()) throw Error(origin + ": model has no trees");
        if (static_cast<int>(model.trees.size()) != model.params.n_trees)
            throw Error(origin + ": tree count does not match params.n_trees");
        return model;
    } catch (const json::exception& e) {
        throw Error(origin + ": corrupt model file: " + e.what());
    }
}

void save_model(const ForestModel& model, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open '" + path + "' for writing");
    out << model_to_json(model) << '\n';
    if (!out) throw Error("failed writing '" + path + "'");
}

ForestModel load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return model_from_json(buf.str(), path);
}

} // namespace cosseg
