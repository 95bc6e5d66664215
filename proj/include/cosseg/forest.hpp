#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cosseg/exec.hpp"
#include "cosseg/traffic.hpp"

namespace cosseg {

// One tree node in a flat pool; root at index 0. Internal nodes route
// x[feature] <= threshold to the left child. Leaves keep the per-class counts
// of the (bootstrap) training rows that reached them.
struct TreeNode {
    int feature = -1; // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    std::vector<int64_t> class_counts; // leaves only

    bool is_leaf() const { return feature < 0; }
};

struct Tree {
    std::vector<TreeNode> nodes;
};

struct TrainParams {
    int n_trees = 10;
    uint64_t seed = 0;
    int max_features = 4; // ceil(sqrt(11)); >= 11 disables feature subsampling
    int min_samples_split = 2;
    bool bootstrap = true; // test hook; disabled trains each tree on the rows as-is
    ExecPolicy policy = ExecPolicy::Parallel;
};

struct TrainMeta {
    int n = 0;   // segment size the training matrix was built with
    int s_t = 0; // training segments per class
    uint64_t seed = 0;
    std::string dataset;
};

struct ForestModel {
    std::vector<Tree> trees;
    std::vector<CosLabel> classes; // ordered by id, dense 0..K-1
    int n_features = kNumFeatures;
    std::array<double, kNumFeatures> importances{};
    TrainParams params;
    TrainMeta train_meta;
};

// Gini impurity 1 - sum(p_k^2); throws on an all-zero count vector.
double gini(std::span<const int64_t> class_counts);

struct Split {
    int feature = -1;
    double threshold = 0.0;
    double decrease = 0.0; // impurity decrease, weighted by child sizes
};

// Best (feature, threshold) over candidate thresholds at the midpoints of
// consecutive distinct sorted values of each feature in `features`. Returns
// nullopt when no candidate decreases impurity. Ties break on lower feature
// index, then lower threshold.
std::optional<Split> best_split(std::span<const std::array<double, kNumFeatures>> x,
                                std::span<const int> y, int n_classes,
                                std::span<const int> rows, std::span<const int> features);

// Bootstrap row indices for one tree: a pure function of (seed, tree_index,
// n_rows), so parallel and serial training produce identical forests.
std::vector<int> bootstrap_indices(uint64_t seed, int tree_index, int n_rows);

ForestModel train_forest(const SegmentMatrix& matrix, const TrainParams& params = {},
                         const TrainMeta& meta = {});

// Majority vote over the trees' leaf-majority classes; ties go to the lowest
// class id. Returns the class index into model.classes.
int predict_index(const ForestModel& model, const SegmentVector& v);
CosLabel predict(const ForestModel& model, const SegmentVector& v);

std::vector<int> predict_batch(const ForestModel& model,
                               std::span<const SegmentMatrix::Row> rows,
                               ExecPolicy policy = ExecPolicy::Parallel);

// Mean-decrease-in-impurity importances recomputed from the tree structure:
// per tree, sum of (node sample fraction x impurity decrease) per split
// feature, normalized within the tree, averaged across trees, re-normalized.
// All zeros when no tree has a split.
std::array<double, kNumFeatures> feature_importance(const ForestModel& model);

// Versioned JSON document; load rejects unknown versions and wrong feature
// counts. Numbers round-trip exactly.
void save_model(const ForestModel& model, const std::string& path);
ForestModel load_model(const std::string& path);
std::string model_to_json(const ForestModel& model);
ForestModel model_from_json(const std::string& text, const std::string& origin = "<memory>");

} // namespace cosseg
