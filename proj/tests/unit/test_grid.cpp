#include <gtest/gtest.h>

#include "frakdiff/grid.hpp"

using namespace frakdiff;

TEST(FoldIndex, LowerHalfIsUnchanged) { EXPECT_EQ(fold_component(3, 8), 3); }

TEST(FoldIndex, UpperHalfWrapsNegative) { EXPECT_EQ(fold_component(5, 8), -3); }

TEST(FoldIndex, NyquistStaysPositive) { EXPECT_EQ(fold_component(4, 8), 4); }

TEST(FoldIndex, Componentwise) {
    const MultiIndex m{0, 7};
    EXPECT_EQ(fold_index(m, 8), (MultiIndex{0, -1}));
}

TEST(FoldIndex, RangeIsHalfOpenSymmetric) {
    for (std::int64_t m = 0; m < 16; ++m) {
        const auto f = fold_component(m, 16);
        EXPECT_GE(f, -7);
        EXPECT_LE(f, 8);
        EXPECT_EQ(((f % 16) + 16) % 16, m);
    }
}

TEST(FoldIndex, OutOfRangeThrows) {
    EXPECT_THROW(fold_component(8, 8), InputError);
    EXPECT_THROW(fold_component(-1, 8), InputError);
}

TEST(Grid, RowMajorRoundTrip) {
    const Grid g(3, 4);
    EXPECT_EQ(g.size(), 64u);
    for (std::size_t i = 0; i < g.size(); ++i) EXPECT_EQ(g.flatten(g.unflatten(i)), i);
    EXPECT_EQ(g.unflatten(1), (MultiIndex{0, 0, 1}));
    EXPECT_EQ(g.unflatten(4), (MultiIndex{0, 1, 0}));
}

TEST(Grid, CoordinatesAreNodeOverN) {
    const Grid g(2, 8);
    const auto x = g.coordinates(g.flatten(MultiIndex{3, 5}));
    EXPECT_DOUBLE_EQ(x[0], 3.0 / 8);
    EXPECT_DOUBLE_EQ(x[1], 5.0 / 8);
}

TEST(Grid, RejectsBadSizes) {
    EXPECT_THROW(Grid(1, 1), ConfigurationError);
    EXPECT_THROW(Grid(1, 12), ConfigurationError);
    EXPECT_THROW(Grid(0, 8), ConfigurationError);
}
