#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "crisis/corpus.hpp"
#include "crisis/embed.hpp"

namespace crisis {

enum class SplitCriterion { Gini };
enum class FeatureSubset { SqrtTotal, All };

struct ForestParams {
    int n_trees = 100;
    SplitCriterion criterion = SplitCriterion::Gini;
    std::optional<int> max_depth;  // empty = unbounded
    int min_samples_split = 2;
    FeatureSubset max_features = FeatureSubset::SqrtTotal;
    bool bootstrap = true;
    uint64_t seed = 0;
};

// 1 - sum((c/total)^2) over the two classes.
double gini_impurity(long long related, long long not_related);

struct SplitChoice {
    int feature = -1;
    double threshold = 0.0;
    double impurity_decrease = 0.0;
};

// Exhaustive search over midpoints of consecutive distinct sorted values for
// each candidate feature. Ties break toward the lower feature index, then
// the lower threshold. Returns nothing when no split reduces impurity.
std::optional<SplitChoice> best_split(const Eigen::MatrixXd& X,
                                      const std::vector<LabelClass>& y,
                                      const std::vector<int>& rows,
                                      const std::vector<int>& features);

// Flat node store; index 0 is the root. Leaves keep their class counts and
// vote their majority class (ties vote NotRelated).
struct TreeNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    long long count_related = 0;
    long long count_not_related = 0;
};

struct DecisionTree {
    std::vector<TreeNode> nodes;

    LabelClass predict_row(const Eigen::Ref<const Eigen::RowVectorXd>& row) const;
};

struct RandomForestModel {
    std::vector<DecisionTree> trees;
    ForestParams params;
    int feature_count = 0;
    Representation representation = Representation::LF;
    std::string schema_version = "forest-v1";
};

// Bootstrap + random feature subsets per node; per-tree seeds derive from
// params.seed and the tree index, so results do not depend on `workers`.
RandomForestModel fit_forest(const FeatureMatrix& X, const std::vector<LabelClass>& y,
                             const ForestParams& params, int workers = 1);

// Majority vote over trees; a tied vote yields NotRelated, so the label is
// Related exactly when predict_proba exceeds 0.5.
std::vector<LabelClass> predict(const RandomForestModel& model,
                                const Eigen::MatrixXd& X);
std::vector<double> predict_proba(const RandomForestModel& model,
                                  const Eigen::MatrixXd& X);

void save_model(const RandomForestModel& model, const std::string& path);
RandomForestModel load_model(const std::string& path);

}  // namespace crisis
