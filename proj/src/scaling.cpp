#include "tempeval/scaling.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace tempeval {

namespace {

constexpr double kTinyDist = 1e-12;

double to_lambda(double dist) {
    if (std::isinf(dist)) return 0.0;
    return 1.0 / std::max(dist, kTinyDist);
}

struct DendroNode {
    int left = -1;   // child node id, or -1 for a leaf
    int right = -1;
    int point = -1;  // sorted-point index for leaves
    double height = 0.0;
    int size = 1;
};

struct CondCluster {
    int parent = -1;
    int child_a = -1;
    int child_b = -1;
    double birth_dist = std::numeric_limits<double>::infinity();
    double split_dist = 0.0;
    int n_at_split = 0;
    std::vector<std::pair<int, double>> fallen; // (sorted-point index, fall distance)
};

// Collects the sorted-point indices under a dendrogram node.
void collect_points(const std::vector<DendroNode>& nodes, int node, std::vector<int>& out) {
    if (nodes[size_t(node)].point >= 0) {
        out.push_back(nodes[size_t(node)].point);
        return;
    }
    collect_points(nodes, nodes[size_t(node)].left, out);
    collect_points(nodes, nodes[size_t(node)].right, out);
}

double cluster_stability(const CondCluster& c) {
    const double birth = to_lambda(c.birth_dist);
    double s = 0.0;
    for (const auto& [point, dist] : c.fallen) s += to_lambda(dist) - birth;
    if (c.child_a >= 0) s += c.n_at_split * (to_lambda(c.split_dist) - birth);
    return s;
}

} // namespace

std::vector<int> cluster_answers(const std::vector<double>& values, double min_frac) {
    const int n = static_cast<int>(values.size());
    if (n == 0) return {};
    if (min_frac <= 0.0 || min_frac > 1.0) throw std::invalid_argument("min_frac not in (0,1]");
    const int mcs = std::max(2, static_cast<int>(std::ceil(min_frac * n)));
    if (n < 2 * mcs) return std::vector<int>(static_cast<size_t>(n), 0);

    // Sort once; everything below works in sorted-point indices.
    std::vector<int> order(static_cast<size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (values[size_t(a)] != values[size_t(b)]) return values[size_t(a)] < values[size_t(b)];
        return a < b;
    });
    std::vector<double> v(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) v[size_t(i)] = values[size_t(order[size_t(i)])];

    // Core distance: distance to the k-th nearest other point, k = mcs - 1.
    const int k = mcs - 1;
    std::vector<double> core(static_cast<size_t>(n), 0.0);
    for (int i = 0; i < n; ++i) {
        double best = std::numeric_limits<double>::infinity();
        int lo = std::max(0, i - k);
        int hi = std::min(i, n - 1 - k);
        for (int w = lo; w <= hi; ++w) {
            double d = std::max(v[size_t(i)] - v[size_t(w)], v[size_t(w + k)] - v[size_t(i)]);
            best = std::min(best, d);
        }
        core[size_t(i)] = best;
    }

    // Minimum spanning tree over mutual reachability (Prim, O(n^2)).
    auto mreach = [&](int a, int b) {
        return std::max({core[size_t(a)], core[size_t(b)], std::abs(v[size_t(a)] - v[size_t(b)])});
    };
    std::vector<bool> in_tree(static_cast<size_t>(n), false);
    std::vector<double> best_dist(static_cast<size_t>(n), std::numeric_limits<double>::infinity());
    std::vector<int> best_from(static_cast<size_t>(n), 0);
    struct Edge {
        double w;
        int a;
        int b;
    };
    std::vector<Edge> edges;
    edges.reserve(size_t(n - 1));
    in_tree[0] = true;
    for (int i = 1; i < n; ++i) best_dist[size_t(i)] = mreach(0, i);
    for (int added = 1; added < n; ++added) {
        int next = -1;
        for (int i = 0; i < n; ++i) {
            if (in_tree[size_t(i)]) continue;
            if (next < 0 || best_dist[size_t(i)] < best_dist[size_t(next)]) next = i;
        }
        edges.push_back({best_dist[size_t(next)],
                         std::min(best_from[size_t(next)], next),
                         std::max(best_from[size_t(next)], next)});
        in_tree[size_t(next)] = true;
        for (int i = 0; i < n; ++i) {
            if (in_tree[size_t(i)]) continue;
            double d = mreach(next, i);
            if (d < best_dist[size_t(i)]) {
                best_dist[size_t(i)] = d;
                best_from[size_t(i)] = next;
            }
        }
    }
    std::sort(edges.begin(), edges.end(), [](const Edge& x, const Edge& y) {
        if (x.w != y.w) return x.w < y.w;
        if (x.a != y.a) return x.a < y.a;
        return x.b < y.b;
    });

    // Single-linkage dendrogram.
    std::vector<DendroNode> nodes(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) nodes[size_t(i)].point = i;
    std::vector<int> root_of(static_cast<size_t>(n));
    std::iota(root_of.begin(), root_of.end(), 0);
    std::vector<int> find_parent(static_cast<size_t>(n));
    std::iota(find_parent.begin(), find_parent.end(), 0);
    std::function<int(int)> find = [&](int x) {
        while (find_parent[size_t(x)] != x) {
            find_parent[size_t(x)] = find_parent[size_t(find_parent[size_t(x)])];
            x = find_parent[size_t(x)];
        }
        return x;
    };
    for (const auto& e : edges) {
        int ra = find(e.a), rb = find(e.b);
        DendroNode merged;
        merged.left = root_of[size_t(ra)];
        merged.right = root_of[size_t(rb)];
        merged.height = e.w;
        merged.size = nodes[size_t(merged.left)].size + nodes[size_t(merged.right)].size;
        merged.point = -1;
        nodes.push_back(merged);
        find_parent[size_t(rb)] = ra;
        root_of[size_t(ra)] = static_cast<int>(nodes.size()) - 1;
    }
    const int dendro_root = root_of[size_t(find(0))];

    // Condensed tree: descend, dropping sub-mcs sides as fallen points and
    // splitting only when both sides reach the minimum cluster size.
    std::vector<CondCluster> cond;
    std::vector<int> owner(static_cast<size_t>(n), -1); // sorted-point -> condensed cluster it fell from
    struct Walk {
        int dendro;
        int cluster;
    };
    cond.push_back(CondCluster{});
    std::vector<Walk> stack{{dendro_root, 0}};
    while (!stack.empty()) {
        auto [node, cluster] = stack.back();
        stack.pop_back();
        while (true) {
            const DendroNode& dn = nodes[size_t(node)];
            if (dn.point >= 0) { // lone remaining point; dissolve here
                cond[size_t(cluster)].fallen.push_back({dn.point, 0.0});
                owner[size_t(dn.point)] = cluster;
                break;
            }
            const int sa = nodes[size_t(dn.left)].size;
            const int sb = nodes[size_t(dn.right)].size;
            if (sa >= mcs && sb >= mcs) {
                CondCluster child;
                child.parent = cluster;
                child.birth_dist = dn.height;
                cond[size_t(cluster)].split_dist = dn.height;
                cond[size_t(cluster)].n_at_split = dn.size;
                cond.push_back(child);
                int ida = static_cast<int>(cond.size()) - 1;
                cond.push_back(child);
                int idb = static_cast<int>(cond.size()) - 1;
                cond[size_t(cluster)].child_a = ida;
                cond[size_t(cluster)].child_b = idb;
                stack.push_back({dn.left, ida});
                stack.push_back({dn.right, idb});
                break;
            }
            if (sa < mcs && sb < mcs) { // cluster dissolves
                std::vector<int> pts;
                collect_points(nodes, node, pts);
                for (int p : pts) {
                    cond[size_t(cluster)].fallen.push_back({p, dn.height});
                    owner[size_t(p)] = cluster;
                }
                break;
            }
            const int small = sa < mcs ? dn.left : dn.right;
            const int big = sa < mcs ? dn.right : dn.left;
            std::vector<int> pts;
            collect_points(nodes, small, pts);
            for (int p : pts) {
                cond[size_t(cluster)].fallen.push_back({p, dn.height});
                owner[size_t(p)] = cluster;
            }
            node = big;
        }
    }

    // Excess-of-mass selection, root eligible (single cluster allowed).
    const int n_cond = static_cast<int>(cond.size());
    std::vector<double> total(size_t(n_cond), 0.0);
    std::vector<bool> selected(size_t(n_cond), false);
    for (int c = n_cond - 1; c >= 0; --c) { // children always have larger ids
        const double own = cluster_stability(cond[size_t(c)]);
        if (cond[size_t(c)].child_a < 0) {
            total[size_t(c)] = own;
            selected[size_t(c)] = true;
            continue;
        }
        const double child_total =
            total[size_t(cond[size_t(c)].child_a)] + total[size_t(cond[size_t(c)].child_b)];
        if (own >= child_total) {
            total[size_t(c)] = own;
            selected[size_t(c)] = true;
            // deselect the whole subtree
            std::vector<int> sub{cond[size_t(c)].child_a, cond[size_t(c)].child_b};
            while (!sub.empty()) {
                int d = sub.back();
                sub.pop_back();
                selected[size_t(d)] = false;
                if (cond[size_t(d)].child_a >= 0) {
                    sub.push_back(cond[size_t(d)].child_a);
                    sub.push_back(cond[size_t(d)].child_b);
                }
            }
        } else {
            total[size_t(c)] = child_total;
        }
    }

    // Map each point to the nearest selected ancestor of its owner cluster.
    std::vector<int> raw_label(static_cast<size_t>(n), -1);
    for (int i = 0; i < n; ++i) {
        int c = owner[size_t(i)];
        while (c >= 0 && !selected[size_t(c)]) c = cond[size_t(c)].parent;
        raw_label[size_t(i)] = c;
    }

    // Cluster means over labelled members, then attach noise to the nearest.
    std::map<int, std::pair<double, int>> sums; // cond id -> (sum, count)
    for (int i = 0; i < n; ++i) {
        if (raw_label[size_t(i)] < 0) continue;
        auto& [sum, cnt] = sums[raw_label[size_t(i)]];
        sum += v[size_t(i)];
        ++cnt;
    }
    std::vector<std::pair<double, int>> means; // (mean, cond id), ascending
    for (const auto& [id, sc] : sums) means.push_back({sc.first / sc.second, id});
    std::sort(means.begin(), means.end());
    for (int i = 0; i < n; ++i) {
        if (raw_label[size_t(i)] >= 0) continue;
        int best = means.front().second;
        double best_d = std::abs(v[size_t(i)] - means.front().first);
        for (const auto& [mean, id] : means) {
            double d = std::abs(v[size_t(i)] - mean);
            if (d < best_d) {
                best_d = d;
                best = id;
            }
        }
        raw_label[size_t(i)] = best;
    }

    // Contiguous labels ordered by final cluster mean.
    std::map<int, std::pair<double, int>> final_sums;
    for (int i = 0; i < n; ++i) {
        auto& [sum, cnt] = final_sums[raw_label[size_t(i)]];
        sum += v[size_t(i)];
        ++cnt;
    }
    std::vector<std::pair<double, int>> final_means;
    for (const auto& [id, sc] : final_sums) final_means.push_back({sc.first / sc.second, id});
    std::sort(final_means.begin(), final_means.end());
    std::map<int, int> relabel;
    for (size_t rank = 0; rank < final_means.size(); ++rank)
        relabel[final_means[rank].second] = static_cast<int>(rank);

    std::vector<int> labels(static_cast<size_t>(n), 0);
    for (int i = 0; i < n; ++i)
        labels[size_t(order[size_t(i)])] = relabel[raw_label[size_t(i)]];
    return labels;
}

ClusterAssignment assign_clusters(const Corpus& corpus, double min_frac) {
    ClusterAssignment out;
    std::map<StatKey, std::vector<std::pair<std::string, double>>> groups;
    for (const auto& item : corpus.items) {
        auto parsed = parse_temporal(item.expected_raw, item.format);
        if (!parsed.parsed()) continue; // load-time validation makes this unreachable
        const auto view = numeric_view(*parsed.value);
        groups[StatKey{item.dataset, item.split, item.unit}].push_back({item.id, view.magnitude});
    }
    for (const auto& [key, members] : groups) {
        std::vector<double> vals;
        vals.reserve(members.size());
        for (const auto& m : members) vals.push_back(m.second);
        const auto labels = cluster_answers(vals, min_frac);
        int n_clusters = 1 + *std::max_element(labels.begin(), labels.end());
        out.cluster_count[key] = n_clusters;
        for (size_t i = 0; i < members.size(); ++i) {
            out.by_item[members[i].first] =
                GroupKey{key.dataset, key.split, key.unit, labels[i]};
        }
    }
    return out;
}

ScalingTable build_scaling_table(const Corpus& corpus, const ClusterAssignment& assignment) {
    ScalingTable table;
    std::map<GroupKey, std::vector<std::pair<std::string, double>>> members;
    for (const auto& item : corpus.items) {
        auto key_it = assignment.by_item.find(item.id);
        if (key_it == assignment.by_item.end())
            throw std::runtime_error("cluster assignment does not cover item " + item.id);
        auto parsed = parse_temporal(item.expected_raw, item.format);
        const auto view = numeric_view(*parsed.value);
        members[key_it->second].push_back({item.id, view.magnitude});
    }
    for (const auto& [key, group] : members) {
        GroupScale scale;
        scale.n = static_cast<int>(group.size());
        scale.min = group.front().second;
        scale.max = group.front().second;
        double sum = 0.0;
        for (const auto& [id, value] : group) {
            sum += value;
            scale.min = std::min(scale.min, value);
            scale.max = std::max(scale.max, value);
        }
        scale.mean = sum / static_cast<double>(group.size());
        table.groups[key] = scale;
        for (const auto& [id, value] : group) {
            table.denominator[id] = std::abs(value - scale.mean);
            table.key_of[id] = key;
        }
    }
    return table;
}

void write_scaling_csv(const ScalingTable& table, std::ostream& os) {
    os << "dataset,split,unit,cluster,n,mean,min,max\n";
    for (const auto& [key, scale] : table.groups) {
        os << to_string(key.dataset) << ',' << to_string(key.split) << ','
           << to_string(key.unit) << ',' << key.cluster << ',' << scale.n << ','
           << format_double(scale.mean) << ',' << format_double(scale.min) << ','
           << format_double(scale.max) << '\n';
    }
}

ScalingTable scaling_from_csv(const Corpus& corpus, std::istream& is) {
    ScalingTable table;
    std::map<StatKey, std::vector<std::pair<double, GroupKey>>> means_by_group;
    std::string line;
    bool header = true;
    while (std::getline(is, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        if (header) {
            header = false;
            continue;
        }
        std::istringstream cells(line);
        std::string dataset, split, unit, cluster, n, mean, min, max;
        if (!std::getline(cells, dataset, ',') || !std::getline(cells, split, ',') ||
            !std::getline(cells, unit, ',') || !std::getline(cells, cluster, ',') ||
            !std::getline(cells, n, ',') || !std::getline(cells, mean, ',') ||
            !std::getline(cells, min, ',') || !std::getline(cells, max, ','))
            throw std::runtime_error("malformed scaling CSV row: " + line);
        auto ds = dataset_from_string(dataset);
        auto sp = split_from_string(split);
        auto un = unit_from_string(unit);
        if (!ds || !sp || !un) throw std::runtime_error("bad scaling CSV key: " + line);
        GroupKey key{*ds, *sp, *un, std::stoi(cluster)};
        GroupScale scale{std::stod(mean), std::stod(min), std::stod(max), std::stoi(n)};
        table.groups[key] = scale;
        means_by_group[StatKey{*ds, *sp, *un}].push_back({scale.mean, key});
    }
    if (table.groups.empty()) throw std::runtime_error("empty scaling CSV");
    for (const auto& item : corpus.items) {
        auto group = means_by_group.find(StatKey{item.dataset, item.split, item.unit});
        if (group == means_by_group.end())
            throw std::runtime_error("scaling CSV has no group for item " + item.id);
        auto parsed = parse_temporal(item.expected_raw, item.format);
        const double value = numeric_view(*parsed.value).magnitude;
        const auto& candidates = group->second;
        GroupKey best = candidates.front().second;
        double best_d = std::abs(value - candidates.front().first);
        for (const auto& [mean, key] : candidates) {
            double d = std::abs(value - mean);
            if (d < best_d) {
                best_d = d;
                best = key;
            }
        }
        table.denominator[item.id] = std::abs(value - table.groups[best].mean);
        table.key_of[item.id] = best;
    }
    return table;
}

} // namespace tempeval
