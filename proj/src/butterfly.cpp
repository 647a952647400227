#include "robust/butterfly.hpp"

#include <limits>

namespace robust {

Topology::Topology(int k, int d) : k_(k), d_(d) {
    if (k < 2) throw ParameterError("butterfly arity k must be >= 2");
    if (d < 1) throw ParameterError("butterfly dimension d must be >= 1");
    pow_.push_back(1);
    for (int i = 0; i < d; ++i) {
        if (pow_.back() > std::numeric_limits<std::uint32_t>::max() / static_cast<std::uint32_t>(k)) {
            throw ParameterError("k^d does not fit into 32 bits");
        }
        pow_.push_back(pow_.back() * static_cast<std::uint32_t>(k));
    }
    n_ = pow_.back();
}

Topology Topology::for_servers(std::uint32_t n, int k) {
    if (k < 2) throw ParameterError("butterfly arity k must be >= 2");
    std::uint64_t p = 1;
    int d = 0;
    while (p < n) {
        p *= static_cast<std::uint64_t>(k);
        ++d;
    }
    if (p != n || d == 0) {
        throw ParameterError("n = " + std::to_string(n) + " is not a power of k = " + std::to_string(k));
    }
    return Topology(k, d);
}

std::vector<NodeId> Topology::neighbors(NodeId node, Direction dir) const {
    if (!valid(node)) throw ParameterError("node out of range");
    std::vector<NodeId> out;
    out.reserve(k_);
    if (dir == Direction::down) {
        if (node.level >= d_) throw ParameterError("level-d nodes have no down-neighbors");
        for (int b = 0; b < k_; ++b) out.push_back({node.level + 1, with_digit(node.column, node.level, b)});
    } else {
        if (node.level <= 0) throw ParameterError("level-0 nodes have no up-neighbors");
        for (int b = 0; b < k_; ++b) out.push_back({node.level - 1, with_digit(node.column, node.level - 1, b)});
    }
    return out;
}

std::vector<Column> Topology::sub_butterfly_columns(NodeId node) const {
    if (!valid(node)) throw ParameterError("node out of range");
    const Column base = sub_butterfly_base(node);
    std::vector<Column> out(pow_[node.level]);
    for (std::uint32_t i = 0; i < out.size(); ++i) out[i] = base + i;
    return out;
}

Column Topology::path_column(Column start, Column target, int level) const {
    // digits level..d-1 come from the target, the rest from the start
    const std::uint32_t low = pow_[level];
    return target - target % low + start % low;
}

std::vector<NodeId> Topology::probe_path(Column start, Column target) const {
    if (start >= n_ || target >= n_) throw ParameterError("column out of range");
    std::vector<NodeId> path;
    path.reserve(d_ + 1);
    for (int level = d_; level >= 0; --level) path.push_back({level, path_column(start, target, level)});
    return path;
}

std::vector<NodeId> Topology::upward_tree(NodeId node) const {
    if (!valid(node)) throw ParameterError("node out of range");
    std::vector<NodeId> out{node};
    std::size_t frontier_begin = 0;
    for (int level = node.level; level > 0; --level) {
        const std::size_t frontier_end = out.size();
        for (std::size_t i = frontier_begin; i < frontier_end; ++i) {
            for (int b = 0; b < k_; ++b) out.push_back({level - 1, with_digit(out[i].column, level - 1, b)});
        }
        frontier_begin = frontier_end;
    }
    return out;
}

std::vector<Column> Topology::group_columns(int level, Column col) const {
    if (level < 0 || level >= d_) throw ParameterError("coding groups exist for levels 0..d-1");
    std::vector<Column> out(k_);
    for (int b = 0; b < k_; ++b) out[b] = with_digit(col, level, b);
    return out;
}

std::string Topology::column_string(Column col) const {
    std::string s(d_, '0');
    for (int pos = 0; pos < d_; ++pos) {
        const unsigned dg = digit(col, pos);
        s[d_ - 1 - pos] = static_cast<char>(dg < 10 ? '0' + dg : 'a' + (dg - 10));
    }
    return s;
}

Column Topology::parse_column(const std::string& digits) const {
    if (static_cast<int>(digits.size()) != d_) throw ParameterError("column needs exactly d digits");
    Column col = 0;
    for (char ch : digits) {
        unsigned v;
        if (ch >= '0' && ch <= '9') {
            v = static_cast<unsigned>(ch - '0');
        } else if (ch >= 'a' && ch <= 'z') {
            v = static_cast<unsigned>(ch - 'a' + 10);
        } else {
            throw ParameterError("bad digit in column string");
        }
        if (v >= static_cast<unsigned>(k_)) throw ParameterError("column digit >= k");
        col = col * static_cast<Column>(k_) + v;
    }
    return col;
}

std::string to_string(const Topology& topo, NodeId node) {
    return "(" + std::to_string(node.level) + "," + topo.column_string(node.column) + ")";
}

}  // namespace robust
