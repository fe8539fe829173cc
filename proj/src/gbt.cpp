#include "wikisustain/gbt.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <numeric>
#include <set>
#include <stdexcept>

namespace wikisustain::model {

double logistic(double margin) {
    if (margin >= 0) return 1.0 / (1.0 + std::exp(-margin));
    const double e = std::exp(margin);
    return e / (1.0 + e);
}

double Tree::predict(std::span<const double> row) const {
    int j = 0;
    while (!nodes[static_cast<std::size_t>(j)].is_leaf()) {
        const auto& n = nodes[static_cast<std::size_t>(j)];
        j = row[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
    }
    return nodes[static_cast<std::size_t>(j)].value;
}

double Tree::expected_value() const {
    double total = 0.0;
    for (const auto& n : nodes)
        if (n.is_leaf()) total += n.cover * n.value;
    return total / nodes.front().cover;
}

double GbtModel::margin(std::span<const double> row) const {
    double sum = 0.0;
    for (const auto& t : trees) sum += t.predict(row);
    return base_score + learning_rate * sum;
}

double GbtModel::predict_proba(std::span<const double> row) const {
    if (row.size() != columns.size())
        throw std::invalid_argument("row has " + std::to_string(row.size()) + " values, model expects " +
                                    std::to_string(columns.size()));
    return logistic(margin(row));
}

double GbtModel::predict_proba(const std::map<std::string, double>& row) const {
    std::vector<double> values;
    values.reserve(columns.size());
    std::string missing, extra;
    std::set<std::string> known(columns.begin(), columns.end());
    for (const auto& c : columns) {
        auto it = row.find(c);
        if (it == row.end())
            missing += (missing.empty() ? "" : ", ") + c;
        else
            values.push_back(it->second);
    }
    for (const auto& [name, v] : row)
        if (!known.count(name)) extra += (extra.empty() ? "" : ", ") + name;
    if (!missing.empty() || !extra.empty())
        throw std::invalid_argument("column mismatch; missing: [" + missing + "], extra: [" + extra + "]");
    return logistic(margin(values));
}

std::vector<double> GbtModel::predict_proba(const FeatureMatrix& m) const {
    if (m.columns != columns) throw std::invalid_argument("matrix columns differ from the model's columns");
    std::vector<double> out(m.rows());
    for (std::size_t r = 0; r < m.rows(); ++r) out[r] = logistic(margin(m.row(r)));
    return out;
}

nlohmann::ordered_json GbtModel::to_json() const {
    nlohmann::ordered_json j;
    j["schema_version"] = kModelSchemaVersion;
    j["learning_rate"] = learning_rate;
    j["base_score"] = base_score;
    j["seed"] = seed;
    j["params"] = {{"n_trees", params.n_trees},
                   {"max_depth", params.max_depth},
                   {"learning_rate", params.learning_rate},
                   {"min_samples_leaf", params.min_samples_leaf}};
    j["columns"] = columns;
    auto ts = nlohmann::ordered_json::array();
    for (const auto& t : trees) {
        // Nested form: {"feature", "threshold", "cover", "left", "right"} or {"leaf", "cover"}.
        std::function<nlohmann::ordered_json(int)> node = [&](int id) {
            const auto& n = t.nodes[static_cast<std::size_t>(id)];
            nlohmann::ordered_json o;
            if (n.is_leaf()) {
                o["leaf"] = n.value;
                o["cover"] = n.cover;
            } else {
                o["feature"] = n.feature;
                o["threshold"] = n.threshold;
                o["cover"] = n.cover;
                o["left"] = node(n.left);
                o["right"] = node(n.right);
            }
            return o;
        };
        ts.push_back(node(0));
    }
    j["trees"] = std::move(ts);
    return j;
}

GbtModel GbtModel::from_json(const nlohmann::json& j) {
    if (j.at("schema_version").get<int>() != kModelSchemaVersion)
        throw std::runtime_error("unsupported model schema version");
    GbtModel m;
    m.learning_rate = j.at("learning_rate").get<double>();
    m.base_score = j.at("base_score").get<double>();
    m.seed = j.at("seed").get<std::uint64_t>();
    const auto& p = j.at("params");
    m.params = {p.at("n_trees").get<int>(), p.at("max_depth").get<int>(), p.at("learning_rate").get<double>(),
                p.at("min_samples_leaf").get<int>()};
    m.columns = j.at("columns").get<std::vector<std::string>>();
    for (const auto& tj : j.at("trees")) {
        Tree t;
        std::function<int(const nlohmann::json&)> add = [&](const nlohmann::json& o) {
            const auto id = static_cast<int>(t.nodes.size());
            t.nodes.emplace_back();
            TreeNode n;
            n.cover = o.at("cover").get<double>();
            if (o.contains("leaf")) {
                n.value = o.at("leaf").get<double>();
            } else {
                n.feature = o.at("feature").get<int>();
                if (n.feature < 0 || static_cast<std::size_t>(n.feature) >= m.columns.size())
                    throw std::runtime_error("tree refers to an unknown column");
                n.threshold = o.at("threshold").get<double>();
                n.left = add(o.at("left"));
                n.right = add(o.at("right"));
            }
            t.nodes[static_cast<std::size_t>(id)] = n;
            return id;
        };
        add(tj);
        m.trees.push_back(std::move(t));
    }
    return m;
}

void GbtModel::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::trunc);
    out << to_json().dump(1) << '\n';
    if (!out) throw std::runtime_error("cannot write " + path.string());
}

GbtModel GbtModel::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    return from_json(nlohmann::json::parse(in));
}

// ---------------------------------------------------------------------------

namespace {

struct Split {
    double gain = 0.0;
    int feature = -1;
    double threshold = 0.0;
};

struct NodeStats {
    double count = 0, sum = 0;
    double left_count = 0, left_sum = 0;
    double last = 0;
    bool started = false;
};

class TreeBuilder {
public:
    TreeBuilder(const FeatureMatrix& x, const std::vector<std::vector<std::uint32_t>>& order, const GbtParams& p)
        : x_(x), order_(order), params_(p), node_of_(x.rows()) {}

    /// Returns false when the root has no valid split.
    bool build(const std::vector<double>& residual, const std::vector<double>& hessian, Tree& tree) {
        const auto n = x_.rows();
        tree.nodes.assign(1, TreeNode{});
        std::fill(node_of_.begin(), node_of_.end(), 0);
        std::vector<int> frontier{0};
        tree.nodes[0].cover = static_cast<double>(n);
        for (int depth = 0; depth < params_.max_depth && !frontier.empty(); ++depth) {
            const auto splits = find_splits(tree, frontier, residual);
            if (depth == 0 && splits[0].feature < 0) return false;
            std::vector<int> next;
            std::vector<int> left_of(tree.nodes.size(), -1);
            for (std::size_t k = 0; k < frontier.size(); ++k) {
                const auto& s = splits[k];
                if (s.feature < 0) continue;
                const int id = frontier[k];
                const int l = static_cast<int>(tree.nodes.size());
                tree.nodes.emplace_back();
                tree.nodes.emplace_back();
                auto& node = tree.nodes[static_cast<std::size_t>(id)];
                node.feature = s.feature;
                node.threshold = s.threshold;
                node.left = l;
                node.right = l + 1;
                left_of[static_cast<std::size_t>(id)] = l;
                next.push_back(l);
                next.push_back(l + 1);
            }
            for (std::size_t i = 0; i < n; ++i) {
                const int id = node_of_[i];
                if (static_cast<std::size_t>(id) >= left_of.size() || left_of[static_cast<std::size_t>(id)] < 0)
                    continue;
                const auto& node = tree.nodes[static_cast<std::size_t>(id)];
                node_of_[i] = x_.at(i, static_cast<std::size_t>(node.feature)) <= node.threshold ? node.left
                                                                                                  : node.right;
                tree.nodes[static_cast<std::size_t>(node_of_[i])].cover += 1.0;
            }
            frontier = std::move(next);
        }
        std::vector<double> num(tree.nodes.size(), 0.0), den(tree.nodes.size(), 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            num[static_cast<std::size_t>(node_of_[i])] += residual[i];
            den[static_cast<std::size_t>(node_of_[i])] += hessian[i];
        }
        for (std::size_t k = 0; k < tree.nodes.size(); ++k)
            if (tree.nodes[k].is_leaf()) tree.nodes[k].value = std::abs(den[k]) < 1e-150 ? 0.0 : num[k] / den[k];
        return true;
    }

    const std::vector<int>& leaves() const { return node_of_; }

private:
    std::vector<Split> find_splits(const Tree& tree, const std::vector<int>& frontier,
                                   const std::vector<double>& residual) {
        std::vector<int> slot(tree.nodes.size(), -1);
        for (std::size_t k = 0; k < frontier.size(); ++k) slot[static_cast<std::size_t>(frontier[k])] = static_cast<int>(k);
        std::vector<NodeStats> totals(frontier.size());
        for (std::size_t i = 0; i < x_.rows(); ++i) {
            const int k = slot[static_cast<std::size_t>(node_of_[i])];
            if (k < 0) continue;
            totals[static_cast<std::size_t>(k)].count += 1;
            totals[static_cast<std::size_t>(k)].sum += residual[i];
        }
        std::vector<Split> best(frontier.size());
        const auto min_leaf = static_cast<double>(std::max(params_.min_samples_leaf, 1));
        for (std::size_t f = 0; f < x_.cols(); ++f) {
            std::vector<NodeStats> acc = totals;
            for (auto i : order_[f]) {
                const int k = slot[static_cast<std::size_t>(node_of_[i])];
                if (k < 0) continue;
                auto& a = acc[static_cast<std::size_t>(k)];
                const double v = x_.at(i, f);
                if (a.started && v > a.last && a.left_count >= min_leaf && a.count - a.left_count >= min_leaf) {
                    const double rc = a.count - a.left_count, rs = a.sum - a.left_sum;
                    const double gain =
                        a.left_sum * a.left_sum / a.left_count + rs * rs / rc - a.sum * a.sum / a.count;
                    auto& b = best[static_cast<std::size_t>(k)];
                    if (gain > b.gain) {
                        double t = (a.last + v) / 2.0;
                        if (t >= v) t = a.last;
                        b = {gain, static_cast<int>(f), t};
                    }
                }
                a.started = true;
                a.last = v;
                a.left_count += 1;
                a.left_sum += residual[i];
            }
        }
        return best;
    }

    const FeatureMatrix& x_;
    const std::vector<std::vector<std::uint32_t>>& order_;
    const GbtParams& params_;
    std::vector<int> node_of_;
};

}  // namespace

GbtModel train_gbt(const FeatureMatrix& x, const GbtParams& params, std::uint64_t seed) {
    const auto n = x.rows();
    if (n == 0) throw std::invalid_argument("cannot train on an empty matrix");
    const double positives = static_cast<double>(std::count(x.labels.begin(), x.labels.end(), 1));
    if (positives == 0 || positives == static_cast<double>(n))
        throw std::invalid_argument("training labels contain a single class");
    if (params.max_depth < 1 || params.n_trees < 0 || params.learning_rate <= 0)
        throw std::invalid_argument("invalid boosting parameters");

    GbtModel m;
    m.learning_rate = params.learning_rate;
    m.columns = x.columns;
    m.params = params;
    m.seed = seed;
    const double prior = positives / static_cast<double>(n);
    m.base_score = std::log(prior / (1.0 - prior));

    std::vector<std::vector<std::uint32_t>> order(x.cols());
    for (std::size_t f = 0; f < x.cols(); ++f) {
        auto& o = order[f];
        o.resize(n);
        std::iota(o.begin(), o.end(), 0U);
        std::stable_sort(o.begin(), o.end(), [&](std::uint32_t a, std::uint32_t b) { return x.at(a, f) < x.at(b, f); });
    }

    std::vector<double> margin(n, m.base_score), residual(n), hessian(n);
    TreeBuilder builder(x, order, params);
    for (int t = 0; t < params.n_trees; ++t) {
        for (std::size_t i = 0; i < n; ++i) {
            const double p = logistic(margin[i]);
            residual[i] = x.labels[i] - p;
            hessian[i] = p * (1.0 - p);
        }
        Tree tree;
        if (!builder.build(residual, hessian, tree)) {
            if (t == 0) spdlog::warn("no feature varies in a useful way; the model is the base score alone");
            break;
        }
        const auto& leaf = builder.leaves();
        for (std::size_t i = 0; i < n; ++i)
            margin[i] += params.learning_rate * tree.nodes[static_cast<std::size_t>(leaf[i])].value;
        m.trees.push_back(std::move(tree));
    }
    return m;
}

std::vector<double> staged_log_loss(const GbtModel& m, const FeatureMatrix& x) {
    std::vector<double> margin(x.rows(), m.base_score);
    std::vector<double> out;
    auto loss = [&] {
        double s = 0;
        for (std::size_t i = 0; i < x.rows(); ++i) {
            const double p = logistic(margin[i]);
            s -= x.labels[i] ? std::log(p) : std::log1p(-p);
        }
        return s / static_cast<double>(x.rows());
    };
    out.push_back(loss());
    for (const auto& t : m.trees) {
        for (std::size_t i = 0; i < x.rows(); ++i) margin[i] += m.learning_rate * t.predict(x.row(i));
        out.push_back(loss());
    }
    return out;
}

// ---------------------------------------------------------------------------
// TreeSHAP, path-dependent variant.

namespace {

struct PathElement {
    int feature = -1;
    double zero = 0.0;
    double one = 0.0;
    double weight = 0.0;
};

void extend(std::vector<PathElement>& path, double zero, double one, int feature) {
    const auto depth = path.size();
    path.push_back({feature, zero, one, depth == 0 ? 1.0 : 0.0});
    const auto d = static_cast<double>(depth);
    for (std::size_t i = depth; i-- > 0;) {
        path[i + 1].weight += one * path[i].weight * static_cast<double>(i + 1) / (d + 1);
        path[i].weight = zero * path[i].weight * (d - static_cast<double>(i)) / (d + 1);
    }
}

void unwind(std::vector<PathElement>& path, std::size_t index) {
    const auto depth = path.size() - 1;
    const auto d = static_cast<double>(depth);
    const double one = path[index].one, zero = path[index].zero;
    double next = path[depth].weight;
    for (std::size_t i = depth; i-- > 0;) {
        if (one != 0) {
            const double tmp = path[i].weight;
            path[i].weight = next * (d + 1) / (static_cast<double>(i + 1) * one);
            next = tmp - path[i].weight * zero * (d - static_cast<double>(i)) / (d + 1);
        } else {
            path[i].weight = path[i].weight * (d + 1) / (zero * (d - static_cast<double>(i)));
        }
    }
    for (std::size_t i = index; i < depth; ++i) {
        path[i].feature = path[i + 1].feature;
        path[i].zero = path[i + 1].zero;
        path[i].one = path[i + 1].one;
    }
    path.pop_back();
}

double unwound_sum(const std::vector<PathElement>& path, std::size_t index) {
    const auto depth = path.size() - 1;
    const auto d = static_cast<double>(depth);
    const double one = path[index].one, zero = path[index].zero;
    double next = path[depth].weight, total = 0.0;
    for (std::size_t i = depth; i-- > 0;) {
        if (one != 0) {
            const double tmp = next * (d + 1) / (static_cast<double>(i + 1) * one);
            total += tmp;
            next = path[i].weight - tmp * zero * (d - static_cast<double>(i)) / (d + 1);
        } else {
            total += path[i].weight * (d + 1) / (zero * (d - static_cast<double>(i)));
        }
    }
    return total;
}

void recurse(const Tree& tree, std::span<const double> row, int node, std::vector<PathElement> path, double zero,
             double one, int feature, std::vector<double>& phi, double scale) {
    extend(path, zero, one, feature);
    const auto& n = tree.nodes[static_cast<std::size_t>(node)];
    if (n.is_leaf()) {
        for (std::size_t i = 1; i < path.size(); ++i) {
            const double w = unwound_sum(path, i);
            phi[static_cast<std::size_t>(path[i].feature)] += w * (path[i].one - path[i].zero) * n.value * scale;
        }
        return;
    }
    const bool go_left = row[static_cast<std::size_t>(n.feature)] <= n.threshold;
    const int hot = go_left ? n.left : n.right;
    const int cold = go_left ? n.right : n.left;
    const double hot_zero = tree.nodes[static_cast<std::size_t>(hot)].cover / n.cover;
    const double cold_zero = tree.nodes[static_cast<std::size_t>(cold)].cover / n.cover;
    double in_zero = 1.0, in_one = 1.0;
    for (std::size_t i = 1; i < path.size(); ++i) {
        if (path[i].feature == n.feature) {
            in_zero = path[i].zero;
            in_one = path[i].one;
            unwind(path, i);
            break;
        }
    }
    recurse(tree, row, hot, path, hot_zero * in_zero, in_one, n.feature, phi, scale);
    recurse(tree, row, cold, std::move(path), cold_zero * in_zero, 0.0, n.feature, phi, scale);
}

}  // namespace

ShapValues tree_shap(const GbtModel& m, std::span<const double> row) {
    ShapValues out;
    out.phi.assign(m.columns.size(), 0.0);
    out.base = m.base_score;
    for (const auto& t : m.trees) {
        out.base += m.learning_rate * t.expected_value();
        if (t.nodes.size() == 1) continue;
        recurse(t, row, 0, {}, 1.0, 1.0, -1, out.phi, m.learning_rate);
    }
    return out;
}

std::vector<double> mean_abs_shap(const GbtModel& m, const FeatureMatrix& x) {
    std::vector<double> out(m.columns.size(), 0.0);
    if (x.rows() == 0) return out;
    for (std::size_t r = 0; r < x.rows(); ++r) {
        const auto s = tree_shap(m, x.row(r));
        for (std::size_t c = 0; c < out.size(); ++c) out[c] += std::abs(s.phi[c]);
    }
    for (auto& v : out) v /= static_cast<double>(x.rows());
    return out;
}

}  // namespace wikisustain::model
