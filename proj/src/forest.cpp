#include "crisis/forest.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <thread>

#include "crisis/common.hpp"
#include "crisis/io.hpp"

namespace crisis {

double gini_impurity(long long related, long long not_related) {
    if (related < 0 || not_related < 0) {
        throw std::invalid_argument("class counts must be non-negative");
    }
    long long total = related + not_related;
    if (total == 0) {
        throw std::invalid_argument("gini impurity needs at least one sample");
    }
    double pr = static_cast<double>(related) / static_cast<double>(total);
    double pn = static_cast<double>(not_related) / static_cast<double>(total);
    return 1.0 - (pr * pr + pn * pn);
}

std::optional<SplitChoice> best_split(const Eigen::MatrixXd& X,
                                      const std::vector<LabelClass>& y,
                                      const std::vector<int>& rows,
                                      const std::vector<int>& features) {
    const long long n = static_cast<long long>(rows.size());
    if (n < 2) return std::nullopt;

    long long total_related = 0;
    for (int r : rows) {
        if (y[static_cast<std::size_t>(r)] == LabelClass::Related) ++total_related;
    }
    long long total_not = n - total_related;
    if (total_related == 0 || total_not == 0) return std::nullopt;
    const double parent = gini_impurity(total_related, total_not);

    std::vector<int> ordered_features = features;
    std::sort(ordered_features.begin(), ordered_features.end());
    ordered_features.erase(
        std::unique(ordered_features.begin(), ordered_features.end()),
        ordered_features.end());

    std::optional<SplitChoice> best;
    std::vector<std::pair<double, int>> values(rows.size());  // (value, is_related)
    for (int f : ordered_features) {
        for (std::size_t i = 0; i < rows.size(); ++i) {
            values[i] = {X(rows[i], f),
                         y[static_cast<std::size_t>(rows[i])] == LabelClass::Related
                             ? 1
                             : 0};
        }
        std::sort(values.begin(), values.end());

        long long left_related = 0;
        long long left_n = 0;
        for (std::size_t i = 0; i + 1 < values.size(); ++i) {
            left_related += values[i].second;
            ++left_n;
            if (values[i].first == values[i + 1].first) continue;

            long long left_not = left_n - left_related;
            long long right_related = total_related - left_related;
            long long right_n = n - left_n;
            long long right_not = right_n - right_related;
            double weighted =
                (static_cast<double>(left_n) * gini_impurity(left_related, left_not) +
                 static_cast<double>(right_n) *
                     gini_impurity(right_related, right_not)) /
                static_cast<double>(n);
            double decrease = parent - weighted;
            if (decrease <= 0.0) continue;
            double threshold = (values[i].first + values[i + 1].first) / 2.0;
            if (!best.has_value() || decrease > best->impurity_decrease) {
                best = SplitChoice{f, threshold, decrease};
            }
        }
    }
    return best;
}

LabelClass DecisionTree::predict_row(
    const Eigen::Ref<const Eigen::RowVectorXd>& row) const {
    int node = 0;
    while (nodes[static_cast<std::size_t>(node)].feature >= 0) {
        const TreeNode& t = nodes[static_cast<std::size_t>(node)];
        node = row[t.feature] <= t.threshold ? t.left : t.right;
    }
    const TreeNode& leaf = nodes[static_cast<std::size_t>(node)];
    return leaf.count_related > leaf.count_not_related ? LabelClass::Related
                                                       : LabelClass::NotRelated;
}

namespace {

struct TreeBuilder {
    const Eigen::MatrixXd& X;
    const std::vector<LabelClass>& y;
    const ForestParams& params;
    int feature_count;
    int subset_size;
    Rng rng;
    std::vector<TreeNode> nodes;

    std::vector<int> sample_features() {
        if (subset_size >= feature_count) {
            std::vector<int> all(static_cast<std::size_t>(feature_count));
            for (int i = 0; i < feature_count; ++i) all[static_cast<std::size_t>(i)] = i;
            return all;
        }
        std::vector<int> idx(static_cast<std::size_t>(feature_count));
        for (int i = 0; i < feature_count; ++i) idx[static_cast<std::size_t>(i)] = i;
        for (int i = 0; i < subset_size; ++i) {
            std::size_t j = static_cast<std::size_t>(i) +
                            rng.uniform_below(static_cast<uint64_t>(feature_count - i));
            std::swap(idx[static_cast<std::size_t>(i)], idx[j]);
        }
        idx.resize(static_cast<std::size_t>(subset_size));
        std::sort(idx.begin(), idx.end());
        return idx;
    }

    int build(std::vector<int>& rows, int depth) {
        long long related = 0;
        for (int r : rows) {
            if (y[static_cast<std::size_t>(r)] == LabelClass::Related) ++related;
        }
        long long not_related = static_cast<long long>(rows.size()) - related;

        bool can_split =
            related > 0 && not_related > 0 &&
            static_cast<int>(rows.size()) >= params.min_samples_split &&
            (!params.max_depth.has_value() || depth < *params.max_depth);

        std::optional<SplitChoice> split;
        if (can_split) {
            std::vector<int> features = sample_features();
            split = best_split(X, y, rows, features);
        }

        int index = static_cast<int>(nodes.size());
        nodes.emplace_back();
        nodes.back().count_related = related;
        nodes.back().count_not_related = not_related;
        if (!split.has_value()) return index;  // leaf

        std::vector<int> left_rows, right_rows;
        for (int r : rows) {
            (X(r, split->feature) <= split->threshold ? left_rows : right_rows)
                .push_back(r);
        }
        rows.clear();
        rows.shrink_to_fit();

        int left = build(left_rows, depth + 1);
        int right = build(right_rows, depth + 1);
        nodes[static_cast<std::size_t>(index)].feature = split->feature;
        nodes[static_cast<std::size_t>(index)].threshold = split->threshold;
        nodes[static_cast<std::size_t>(index)].left = left;
        nodes[static_cast<std::size_t>(index)].right = right;
        return index;
    }
};

DecisionTree fit_tree(const Eigen::MatrixXd& X, const std::vector<LabelClass>& y,
                      const ForestParams& params, int subset_size, uint64_t tree_seed) {
    TreeBuilder builder{X, y, params, static_cast<int>(X.cols()), subset_size,
                        Rng(tree_seed), {}};
    const int n = static_cast<int>(X.rows());
    std::vector<int> rows;
    rows.reserve(static_cast<std::size_t>(n));
    if (params.bootstrap) {
        for (int i = 0; i < n; ++i) {
            rows.push_back(
                static_cast<int>(builder.rng.uniform_below(static_cast<uint64_t>(n))));
        }
    } else {
        for (int i = 0; i < n; ++i) rows.push_back(i);
    }
    builder.build(rows, 0);
    DecisionTree tree;
    tree.nodes = std::move(builder.nodes);
    return tree;
}

}  // namespace

RandomForestModel fit_forest(const FeatureMatrix& X, const std::vector<LabelClass>& y,
                             const ForestParams& params, int workers) {
    if (params.n_trees < 1) {
        throw std::invalid_argument("n_trees must be at least 1");
    }
    if (params.min_samples_split < 2) {
        throw std::invalid_argument("min_samples_split must be at least 2");
    }
    if (static_cast<std::size_t>(X.values.rows()) != y.size()) {
        throw std::invalid_argument("feature rows and labels must align");
    }
    if (y.size() < 2) {
        throw std::invalid_argument("training needs at least two rows");
    }
    bool any_related = false, any_not = false;
    for (LabelClass c : y) {
        (c == LabelClass::Related ? any_related : any_not) = true;
    }
    if (!any_related || !any_not) {
        throw std::runtime_error("training labels contain a single class");
    }

    RandomForestModel model;
    model.params = params;
    model.feature_count = static_cast<int>(X.values.cols());
    model.representation = X.rep;
    model.trees.resize(static_cast<std::size_t>(params.n_trees));

    int subset_size = model.feature_count;
    if (params.max_features == FeatureSubset::SqrtTotal) {
        subset_size = static_cast<int>(
            std::ceil(std::sqrt(static_cast<double>(model.feature_count))));
        subset_size = std::max(1, std::min(subset_size, model.feature_count));
    }

    auto fit_range = [&](int begin, int end) {
        for (int t = begin; t < end; ++t) {
            model.trees[static_cast<std::size_t>(t)] =
                fit_tree(X.values, y, params, subset_size,
                         derive_seed(params.seed, static_cast<uint64_t>(t)));
        }
    };

    int thread_count = std::max(1, std::min(workers, params.n_trees));
    if (thread_count == 1) {
        fit_range(0, params.n_trees);
    } else {
        std::vector<std::thread> threads;
        int per = (params.n_trees + thread_count - 1) / thread_count;
        for (int w = 0; w < thread_count; ++w) {
            int begin = w * per;
            int end = std::min(params.n_trees, begin + per);
            if (begin >= end) break;
            threads.emplace_back(fit_range, begin, end);
        }
        for (std::thread& th : threads) th.join();
    }
    return model;
}

namespace {

void check_width(const RandomForestModel& model, const Eigen::MatrixXd& X) {
    if (static_cast<int>(X.cols()) != model.feature_count) {
        throw std::invalid_argument(concat("feature width ", X.cols(),
                                           " does not match model width ",
                                           model.feature_count));
    }
}

}  // namespace

std::vector<double> predict_proba(const RandomForestModel& model,
                                  const Eigen::MatrixXd& X) {
    check_width(model, X);
    std::vector<double> out(static_cast<std::size_t>(X.rows()));
    for (Eigen::Index r = 0; r < X.rows(); ++r) {
        long long votes = 0;
        for (const DecisionTree& tree : model.trees) {
            if (tree.predict_row(X.row(r)) == LabelClass::Related) ++votes;
        }
        out[static_cast<std::size_t>(r)] =
            static_cast<double>(votes) / static_cast<double>(model.trees.size());
    }
    return out;
}

std::vector<LabelClass> predict(const RandomForestModel& model,
                                const Eigen::MatrixXd& X) {
    std::vector<double> proba = predict_proba(model, X);
    std::vector<LabelClass> out(proba.size());
    for (std::size_t i = 0; i < proba.size(); ++i) {
        out[i] = proba[i] > 0.5 ? LabelClass::Related : LabelClass::NotRelated;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

void save_model(const RandomForestModel& model, const std::string& path) {
    json doc;
    doc["schema_version"] = model.schema_version;
    doc["params"] = {
        {"n_trees", model.params.n_trees},
        {"criterion", "gini"},
        {"max_depth",
         model.params.max_depth.has_value() ? json(*model.params.max_depth)
                                            : json(nullptr)},
        {"min_samples_split", model.params.min_samples_split},
        {"max_features",
         model.params.max_features == FeatureSubset::SqrtTotal ? "sqrt" : "all"},
        {"bootstrap", model.params.bootstrap},
        {"seed", model.params.seed},
    };
    doc["feature_count"] = model.feature_count;
    doc["representation"] = representation_name(model.representation);
    json trees = json::array();
    for (const DecisionTree& tree : model.trees) {
        json nodes = json::array();
        for (const TreeNode& n : tree.nodes) {
            nodes.push_back(json::array({n.feature, n.threshold, n.left, n.right,
                                         n.count_related, n.count_not_related}));
        }
        trees.push_back(std::move(nodes));
    }
    doc["trees"] = std::move(trees);
    write_file(path, doc.dump() + "\n");
}

RandomForestModel load_model(const std::string& path) {
    json doc;
    try {
        doc = json::parse(read_file(path));
    } catch (const json::parse_error& e) {
        throw std::runtime_error(concat("forest model ", path, ": corrupt file (",
                                        e.what(), ")"));
    }
    RandomForestModel model;
    try {
        std::string version = doc.at("schema_version").get<std::string>();
        if (version != model.schema_version) {
            throw std::runtime_error(concat("forest model ", path,
                                            ": unsupported schema version ", version));
        }
        const json& p = doc.at("params");
        model.params.n_trees = p.at("n_trees").get<int>();
        model.params.criterion = SplitCriterion::Gini;
        if (!p.at("max_depth").is_null()) {
            model.params.max_depth = p.at("max_depth").get<int>();
        }
        model.params.min_samples_split = p.at("min_samples_split").get<int>();
        model.params.max_features = p.at("max_features").get<std::string>() == "all"
                                        ? FeatureSubset::All
                                        : FeatureSubset::SqrtTotal;
        model.params.bootstrap = p.at("bootstrap").get<bool>();
        model.params.seed = p.at("seed").get<uint64_t>();
        model.feature_count = doc.at("feature_count").get<int>();
        model.representation =
            parse_representation(doc.at("representation").get<std::string>());
        for (const json& tree_json : doc.at("trees")) {
            DecisionTree tree;
            for (const json& n : tree_json) {
                if (!n.is_array() || n.size() != 6) {
                    throw std::runtime_error(concat("forest model ", path,
                                                    ": corrupt node record"));
                }
                TreeNode node;
                node.feature = n[0].get<int>();
                node.threshold = n[1].get<double>();
                node.left = n[2].get<int>();
                node.right = n[3].get<int>();
                node.count_related = n[4].get<long long>();
                node.count_not_related = n[5].get<long long>();
                if (node.feature >= model.feature_count) {
                    throw std::runtime_error(concat("forest model ", path,
                                                    ": feature index out of range"));
                }
                tree.nodes.push_back(node);
            }
            int size = static_cast<int>(tree.nodes.size());
            if (tree.nodes.empty()) {
                throw std::runtime_error(concat("forest model ", path, ": empty tree"));
            }
            for (const TreeNode& node : tree.nodes) {
                if (node.feature >= 0 &&
                    (node.left < 0 || node.left >= size || node.right < 0 ||
                     node.right >= size)) {
                    throw std::runtime_error(concat("forest model ", path,
                                                    ": child index out of range"));
                }
            }
            model.trees.push_back(std::move(tree));
        }
        if (static_cast<int>(model.trees.size()) != model.params.n_trees) {
            throw std::runtime_error(concat("forest model ", path,
                                            ": tree count does not match params"));
        }
    } catch (const json::exception& e) {
        throw std::runtime_error(concat("forest model ", path, ": corrupt file (",
                                        e.what(), ")"));
    }
    return model;
}

}  // namespace crisis
