#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <vector>

#include "robust/types.hpp"

namespace robust {

using Column = std::uint32_t;

// A node (level, column) of BF(k,d). Server j emulates (0,j),...,(d,j).
struct NodeId {
    int level = 0;
    Column column = 0;

    friend auto operator<=>(const NodeId&, const NodeId&) = default;
};

enum class Direction { up, down };

// The d-dimensional k-ary butterfly over n = k^d columns.
//
// Digit convention: the edge between levels l and l+1 varies the (d-l)-th most
// significant digit of the column, i.e. digit l counted from the least
// significant end. A level-l sub-butterfly therefore fixes the d-l most
// significant digits and spans a contiguous block of k^l columns.
class Topology {
public:
    Topology(int k, int d);

    // Finds d with k^d == n; throws ParameterError otherwise.
    static Topology for_servers(std::uint32_t n, int k);

    int k() const noexcept { return k_; }
    int d() const noexcept { return d_; }
    std::uint32_t n() const noexcept { return n_; }

    // k^e
    std::uint32_t power(int e) const { return pow_.at(static_cast<std::size_t>(e)); }

    // digit `pos` counted from the least significant end (0-based)
    unsigned digit(Column col, int pos) const { return (col / pow_[pos]) % k_; }
    Column with_digit(Column col, int pos, unsigned value) const {
        return col - digit(col, pos) * pow_[pos] + value * pow_[pos];
    }

    std::vector<NodeId> neighbors(NodeId node, Direction dir) const;

    // Columns of BF(node): the k^level columns sharing its top d-level digits.
    std::vector<Column> sub_butterfly_columns(NodeId node) const;
    Column sub_butterfly_base(NodeId node) const { return node.column - node.column % pow_[node.level]; }

    // Path (d, start) -> (0, target); the step to level l fixes digit l.
    std::vector<NodeId> probe_path(Column start, Column target) const;

    // The column the path start -> target visits at `level`.
    Column path_column(Column start, Column target, int level) const;

    std::vector<NodeId> upward_tree(NodeId node) const;

    // The k columns of the coding group at `level` containing `col`
    // (those differing only in digit `level`), ordered by that digit.
    std::vector<Column> group_columns(int level, Column col) const;

    // Column as its d base-k digits, most significant first ("100").
    std::string column_string(Column col) const;
    Column parse_column(const std::string& digits) const;

    bool valid(NodeId node) const { return node.level >= 0 && node.level <= d_ && node.column < n_; }

private:
    int k_;
    int d_;
    std::uint32_t n_;
    std::vector<std::uint32_t> pow_;
};

std::string to_string(const Topology& topo, NodeId node);

}  // namespace robust
