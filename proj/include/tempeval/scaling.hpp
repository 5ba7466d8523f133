#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "tempeval/corpus.hpp"

namespace tempeval {

struct GroupKey {
    Dataset dataset = Dataset::ToT;
    Split split = Split::Arithmetic;
    TemporalUnit unit = TemporalUnit::Years;
    int cluster = 0;
    auto operator<=>(const GroupKey&) const = default;
};

// Hierarchical density clustering of 1-D values (mutual-reachability
// single linkage, minimum-cluster-size pruning, excess-of-mass selection;
// single clusters allowed). Every point gets a label; noise points are
// attached to the nearest cluster by distance to its mean. Labels are
// contiguous and ordered by ascending cluster mean.
std::vector<int> cluster_answers(const std::vector<double>& values, double min_frac = 0.30);

struct ClusterAssignment {
    std::map<std::string, GroupKey> by_item;   // item id -> group key
    std::map<StatKey, int> cluster_count;      // (dataset, split, unit) -> #clusters
};

ClusterAssignment assign_clusters(const Corpus& corpus, double min_frac = 0.30);

struct GroupScale {
    double mean = 0.0;
    double min = 0.0;
    double max = 0.0;
    int n = 0;
};

struct ScalingTable {
    static constexpr double kDegenerateEps = 1e-9;

    std::map<GroupKey, GroupScale> groups;
    std::map<std::string, double> denominator; // item id -> |y_i - mean|
    std::map<std::string, GroupKey> key_of;    // item id -> its group

    bool degenerate(const std::string& item_id) const {
        auto it = denominator.find(item_id);
        return it == denominator.end() || it->second < kDegenerateEps;
    }
};

ScalingTable build_scaling_table(const Corpus& corpus, const ClusterAssignment& assignment);

// Audit export: dataset,split,unit,cluster,n,mean,min,max.
void write_scaling_csv(const ScalingTable& table, std::ostream& os);

// Rebuilds a table from an audit CSV by attaching each corpus item to the
// nearest cluster mean within its (dataset, split, unit) group.
ScalingTable scaling_from_csv(const Corpus& corpus, std::istream& is);

} // namespace tempeval
