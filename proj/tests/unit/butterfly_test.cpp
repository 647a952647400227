#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "robust/butterfly.hpp"

namespace robust {
namespace {

std::set<std::string> names(const Topology& t, const std::vector<NodeId>& nodes) {
    std::set<std::string> out;
    for (auto n : nodes) out.insert(to_string(t, n));
    return out;
}

TEST(Butterfly, DownNeighborsOfLevelZero) {
    Topology t(3, 3);
    auto nb = t.neighbors({0, t.parse_column("100")}, Direction::down);
    EXPECT_EQ(names(t, nb), (std::set<std::string>{"(1,100)", "(1,101)", "(1,102)"}));
}

TEST(Butterfly, SingleDigit) {
    Topology t(2, 1);
    EXPECT_EQ(names(t, t.neighbors({0, 0}, Direction::down)), (std::set<std::string>{"(1,0)", "(1,1)"}));
}

TEST(Butterfly, DownNeighborsOfLevelOne) {
    Topology t(3, 3);
    auto nb = t.neighbors({1, t.parse_column("111")}, Direction::down);
    EXPECT_EQ(names(t, nb), (std::set<std::string>{"(2,101)", "(2,111)", "(2,121)"}));
}

TEST(Butterfly, NeighborErrors) {
    Topology t(3, 2);
    EXPECT_THROW(t.neighbors({2, 0}, Direction::down), ParameterError);
    EXPECT_THROW(t.neighbors({0, 0}, Direction::up), ParameterError);
    EXPECT_THROW(t.neighbors({5, 0}, Direction::up), ParameterError);
}

TEST(Butterfly, EdgeSymmetryAndDegree) {
    for (auto [k, d] : {std::pair{2, 3}, {3, 3}, {4, 2}}) {
        Topology t(k, d);
        for (int l = 0; l < d; ++l) {
            for (Column c = 0; c < t.n(); ++c) {
                auto down = t.neighbors({l, c}, Direction::down);
                ASSERT_EQ(down.size(), static_cast<std::size_t>(k));
                for (auto v : down) {
                    auto up = t.neighbors(v, Direction::up);
                    ASSERT_EQ(up.size(), static_cast<std::size_t>(k));
                    EXPECT_NE(std::find(up.begin(), up.end(), NodeId{l, c}), up.end());
                }
            }
        }
    }
}

TEST(Butterfly, SubButterflyOfFigureNode) {
    Topology t(3, 3);
    auto cols = t.sub_butterfly_columns({2, t.parse_column("111")});
    ASSERT_EQ(cols.size(), 9u);
    EXPECT_EQ(t.column_string(cols.front()), "100");
    EXPECT_EQ(t.column_string(cols.back()), "122");
    EXPECT_EQ(t.sub_butterfly_columns({0, 5}), std::vector<Column>{5});
    EXPECT_EQ(t.sub_butterfly_columns({3, 5}).size(), 27u);
}

TEST(Butterfly, SubButterfliesPartitionColumns) {
    Topology t(3, 3);
    for (int l = 0; l <= 3; ++l) {
        std::set<Column> bases;
        std::vector<int> covered(t.n(), 0);
        for (Column c = 0; c < t.n(); ++c) {
            bases.insert(t.sub_butterfly_base({l, c}));
            for (auto x : t.sub_butterfly_columns({l, c})) covered[x]++;
        }
        EXPECT_EQ(bases.size(), t.n() / t.power(l));
        for (int v : covered) EXPECT_EQ(v, static_cast<int>(t.power(l)));
    }
}

TEST(Butterfly, ProbePathIdentity) {
    Topology t(3, 3);
    auto p = t.probe_path(7, 7);
    ASSERT_EQ(p.size(), 4u);
    for (auto n : p) EXPECT_EQ(n.column, 7u);
}

TEST(Butterfly, ProbePathFixesDigitsTopDown) {
    Topology t(2, 2);
    auto p = t.probe_path(t.parse_column("00"), t.parse_column("11"));
    std::vector<std::string> got;
    for (auto n : p) got.push_back(to_string(t, n));
    // the step into level l fixes the digit the l <-> l+1 edges vary
    EXPECT_EQ(got, (std::vector<std::string>{"(2,00)", "(1,10)", "(0,11)"}));
}

TEST(Butterfly, ProbePathsFollowEdges) {
    Topology t(3, 3);
    for (Column s = 0; s < t.n(); s += 5) {
        for (Column g = 0; g < t.n(); ++g) {
            auto p = t.probe_path(s, g);
            ASSERT_EQ(p.size(), 4u);
            EXPECT_EQ(p.front(), (NodeId{3, s}));
            EXPECT_EQ(p.back(), (NodeId{0, g}));
            for (std::size_t i = 0; i + 1 < p.size(); ++i) {
                auto up = t.neighbors(p[i], Direction::up);
                EXPECT_NE(std::find(up.begin(), up.end(), p[i + 1]), up.end());
            }
        }
    }
}

TEST(Butterfly, UpwardTreeOfFigureNode) {
    Topology t(3, 3);
    EXPECT_EQ(t.upward_tree({0, 4}), (std::vector<NodeId>{NodeId{0, 4}}));
    auto ut = t.upward_tree({2, t.parse_column("111")});
    ASSERT_EQ(ut.size(), 13u);
    std::set<NodeId> uniq(ut.begin(), ut.end());
    EXPECT_EQ(uniq.size(), 13u);
    int per_level[3] = {0, 0, 0};
    for (auto n : ut) {
        per_level[n.level]++;
        EXPECT_GE(n.column, t.parse_column("100"));
        EXPECT_LE(n.column, t.parse_column("122"));
    }
    EXPECT_EQ(per_level[2], 1);
    EXPECT_EQ(per_level[1], 3);
    EXPECT_EQ(per_level[0], 9);
}

TEST(Butterfly, UpwardTreeSizeByEnumeration) {
    for (int k = 2; k <= 4; ++k) {
        Topology t(k, 4);
        for (int l = 0; l <= 4; ++l) {
            // enumerate: every node of BF(v) at level j <= l that reaches v going down
            NodeId v{l, t.n() - 1};
            std::size_t count = 0;
            for (int j = 0; j <= l; ++j) {
                for (auto c : t.sub_butterfly_columns(v)) {
                    // (j,c) reaches v iff c agrees with v on digits j..l-1
                    bool ok = true;
                    for (int pos = j; pos < l; ++pos) ok = ok && t.digit(c, pos) == t.digit(v.column, pos);
                    count += ok;
                }
            }
            std::size_t closed = 0, p = 1;
            for (int j = 0; j <= l; ++j, p *= k) closed += p;
            EXPECT_EQ(count, closed);
            EXPECT_EQ(t.upward_tree(v).size(), closed);
        }
    }
}

TEST(Butterfly, GroupColumnsAndStrings) {
    Topology t(3, 3);
    auto g = t.group_columns(1, t.parse_column("021"));
    std::vector<std::string> s;
    for (auto c : g) s.push_back(t.column_string(c));
    EXPECT_EQ(s, (std::vector<std::string>{"001", "011", "021"}));
    EXPECT_THROW(t.parse_column("03"), ParameterError);
    EXPECT_THROW(t.parse_column("003"), ParameterError);
    EXPECT_THROW(Topology::for_servers(10, 3), ParameterError);
    EXPECT_EQ(Topology::for_servers(81, 3).d(), 4);
}

}  // namespace
}  // namespace robust
