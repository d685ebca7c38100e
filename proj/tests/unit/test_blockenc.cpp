#include <gtest/gtest.h>

#include <cmath>

#include "frakdiff/frakdiff.hpp"

using namespace frakdiff;

namespace {

BlockEncodingDesc enc(double factor, int ancillas, double error = 0.0, const std::string& name = oracle::O1) {
    return BlockEncodingDesc::of(name, factor, ancillas, error);
}

}  // namespace

TEST(Lcu, SingleUnitTermIsUnchanged) {
    for (const auto& a : {enc(1.0, 2, 0.01), enc(1.5, 2, 0.0)}) {
        const auto c = lcu_combine({a}, {1.0});
        EXPECT_EQ(c.factor, a.factor);
        EXPECT_EQ(c.ancillas, a.ancillas);
        EXPECT_EQ(c.error, a.error);
        EXPECT_EQ(c.queries, a.queries);
    }
}

TEST(Lcu, SubEncodingErrorScalesWithFactor) {
    EXPECT_DOUBLE_EQ(lcu_combine({enc(1.5, 2, 0.01)}, {1.0}).error, 1.5 * 0.01);
}

TEST(Lcu, FactorIsAlphaTimesL1Norm) {
    const auto c = lcu_combine({enc(2, 1), enc(2, 1), enc(2, 3)}, {1.0, -1.5, 0.5});
    EXPECT_EQ(c.factor, 6.0);
    EXPECT_EQ(c.error, 0.0);
    EXPECT_EQ(c.ancillas, 3 + 2);
    EXPECT_EQ(c.queries.at(oracle::O1), 3u);
}

TEST(Lcu, ErrorFormula) {
    const double eps1 = 0.125;
    const auto c = lcu_combine({enc(1, 0, 0.01), enc(1, 0, 0.01)}, {1.0, 1.0}, eps1);
    EXPECT_DOUBLE_EQ(c.error, 0.02 + eps1);
    EXPECT_EQ(c.ancillas, 1);
}

TEST(Lcu, MixedFactorsAreNormalised) {
    const auto c = lcu_combine({enc(2, 0, 0.5), enc(4, 0, 0.0)}, {1.0, 0.5});
    EXPECT_EQ(c.factor, 4.0);
    EXPECT_EQ(c.error, 4.0 * 0.25);
}

TEST(Lcu, UnknownAncillasPropagate) {
    auto star = enc(1, 0);
    star.ancillas.reset();
    EXPECT_FALSE(lcu_combine({star, enc(1, 2)}, {1, 1}).ancillas.has_value());
}

TEST(Lcu, RejectsEmpty) { EXPECT_THROW(lcu_combine({}, {}), InputError); }

TEST(Product, Examples) {
    const auto p = product(enc(2, 3), enc(5, 1));
    EXPECT_EQ(p.factor, 10.0);
    EXPECT_EQ(p.ancillas, 4);
    EXPECT_EQ(p.error, 0.0);
    EXPECT_DOUBLE_EQ(product(enc(1, 0, 0.1), enc(1, 0, 0.2)).error, 0.3);
    EXPECT_EQ(p.queries.at(oracle::O1), 2u);
}

TEST(Product, IdentityIsTwoSidedUnit) {
    const auto a = enc(3, 2, 0.25, oracle::QFT);
    for (const auto& p : {product(BlockEncodingDesc::identity(), a), product(a, BlockEncodingDesc::identity())}) {
        EXPECT_EQ(p.factor, a.factor);
        EXPECT_EQ(p.ancillas, a.ancillas);
        EXPECT_EQ(p.error, a.error);
        EXPECT_EQ(p.queries, a.queries);
    }
}

TEST(Product, AssociativeInFactorAndError) {
    const auto a = enc(2, 1, 0.125), b = enc(3, 0, 0.25), c = enc(0.5, 2, 0.5);
    const auto l = product(product(a, b), c), r = product(a, product(b, c));
    EXPECT_DOUBLE_EQ(l.factor, r.factor);
    EXPECT_DOUBLE_EQ(l.error, r.error);
    EXPECT_EQ(l.ancillas, r.ancillas);
}

TEST(CompressionGadget, Examples) {
    const auto g4 = compression_gadget({enc(1, 3), enc(1, 1), enc(1, 0), enc(1, 2)});
    EXPECT_EQ(g4.factor, 1.0);
    EXPECT_EQ(g4.ancillas, 6);
    EXPECT_EQ(g4.error, 0.0);
    EXPECT_EQ(g4.queries.at(oracle::O1), 4u);
    EXPECT_EQ(compression_gadget({enc(2, 5)}).ancillas, 6);
    EXPECT_EQ(compression_gadget({enc(2, 1), enc(3, 1)}).factor, 6.0);
}

TEST(CompressionGadget, TrotterProductCounter) {
    for (int r : {1, 2, 7, 50}) {
        std::vector<BlockEncodingDesc> terms;
        for (int j = 0; j < 2 * r + 1; ++j) terms.push_back(enc(1, 2, 0.0, j % 2 ? oracle::O2 : oracle::QFT));
        const auto g = compression_gadget(terms);
        EXPECT_EQ(g.factor, 1.0);
        EXPECT_EQ(g.ancillas, 2 + int(std::ceil(std::log2(2.0 * r + 1))) + 1);
    }
}

TEST(CompressionGadget, RequiresExactEncodings) {
    EXPECT_THROW(compression_gadget({enc(1, 0, 1e-3)}), PreconditionError);
}

TEST(CeilLog2, Values) {
    EXPECT_EQ(ceil_log2(1), 0);
    EXPECT_EQ(ceil_log2(2), 1);
    EXPECT_EQ(ceil_log2(3), 2);
    EXPECT_EQ(ceil_log2(4), 2);
    EXPECT_EQ(ceil_log2(5), 3);
}

TEST(CostModel, Validation) {
    CostModel m;
    EXPECT_TRUE(m.validate().empty());
    m.Q = 5;
    m.gT = 2;
    EXPECT_EQ(m.validate().size(), 1u);
    m.epsilon = 1.0;
    EXPECT_THROW(m.validate(), ConfigurationError);
    CostModel bad;
    bad.alpha = 2.5;
    EXPECT_THROW(cost_trotter(bad), ConfigurationError);
}

TEST(CostTrotter, Examples) {
    CostModel m;
    m.d = 7;
    m.sigma = 0;
    m.alpha = 1.3;
    m.gT = 2;
    m.T = 3;
    m.epsilon = 1e-4;
    const auto c = cost_trotter(m);
    EXPECT_DOUBLE_EQ(c.matrix_queries, std::pow(2.0, 1.5) * std::pow(3.0, 1.5) * 100 * std::pow(7.0, 0.65));
    EXPECT_EQ(c.state_prep_queries, 2.0);
    ASSERT_TRUE(c.gates.has_value());
    auto q = m;
    q.epsilon /= 4;
    EXPECT_NEAR(cost_trotter(q).matrix_queries / c.matrix_queries, 2.0, 1e-12);
}

TEST(CostTimeMarching, Examples) {
    CostModel m;
    m.Q = 1;
    const auto c = cost_time_marching(m);
    EXPECT_EQ(c.state_prep_queries, 1.0);
    EXPECT_FALSE(c.gates.has_value());
    auto m2 = m;
    m2.T *= 2;
    m2.gTildeT *= 2;  // keeps log(T/g̃) fixed
    EXPECT_NEAR(cost_time_marching(m2).matrix_queries / c.matrix_queries, 4.0, 1e-12);
}

TEST(CostDyson, Examples) {
    CostModel m;
    m.epsilon = 1e-7;
    m.d = 3;
    m.sigma = 0.5;
    const auto c = cost_dyson(m);
    EXPECT_NEAR(c.state_prep_queries / c.matrix_queries, 1 / std::log(1e7), 1e-14);
    CostModel lin;
    lin.d = 1;
    lin.sigma = 0;
    lin.gTildeT = 1e3;
    const double a = cost_dyson(lin).matrix_queries;
    lin.T = 2;
    EXPECT_NEAR(cost_dyson(lin).matrix_queries / a, 2.0, 1e-12);
}

TEST(CostLchs, Examples) {
    CostModel m;
    m.gT = 1;
    m.d = 4;
    m.epsilon = 1e-3;
    const auto c = cost_lchs_ip(m);
    EXPECT_EQ(c.state_prep_queries, 1.0);
    ASSERT_TRUE(c.gates.has_value());
    auto h = m;
    h.epsilon /= 2;
    const double r = cost_lchs_ip(h).matrix_queries / c.matrix_queries;
    EXPECT_GT(r, 2.0);
    EXPECT_LE(r, 2.0 * std::pow(1 + std::log(2.0) / std::log(1e3), 3));
    EXPECT_TRUE(std::find(c.oracles.begin(), c.oracles.end(), oracle::HAM_T) != c.oracles.end());
}

TEST(Costs, MonotoneOnLattice) {
    for (auto method : {CostMethod::Trotter, CostMethod::TimeMarching, CostMethod::Dyson, CostMethod::LchsIP}) {
        for (double alpha : {0.5, 2.0})
            for (double sigma : {0.0, 1.0})
                for (double d : {1.0, 3.0, 30.0})
                    for (double T : {0.5, 5.0})
                        for (double eps : {1e-2, 1e-6})
                            for (double g : {1.0, 10.0}) {
                                CostModel m;
                                m.alpha = alpha;
                                m.sigma = sigma;
                                m.d = d;
                                m.T = T;
                                m.epsilon = eps;
                                m.gT = g;
                                m.Q = g;
                                m.gTildeT = 0.1;
                                const double base = evaluate_cost(method, m).matrix_queries;
                                auto bump = [&](auto set) {
                                    CostModel n = m;
                                    set(n);
                                    return evaluate_cost(method, n).matrix_queries;
                                };
                                const char* name = to_string(method);
                                EXPECT_GE(bump([](CostModel& n) { n.d *= 2; }), base) << name;
                                EXPECT_GE(bump([](CostModel& n) { n.T *= 2; }), base) << name;
                                EXPECT_GE(bump([](CostModel& n) { n.gT *= 2; n.Q *= 2; }), base) << name;
                                EXPECT_GE(bump([](CostModel& n) { n.epsilon /= 2; }), base) << name;
                            }
    }
}

TEST(Costs, ExponentAuditMatchesTable) {
    const double alpha = 1.0, sigma = 1.0;
    struct Row {
        CostMethod m;
        double d, inv_eps, T, norm;
    };
    const Row table[] = {
        {CostMethod::Trotter, alpha * (0.5 + sigma / 2), 0.5, 1.5, 1.5},
        {CostMethod::TimeMarching, alpha * (1 + 2 * sigma), 0.0, 2.0, 1.0},
        {CostMethod::Dyson, alpha * (0.5 + sigma), 0.0, 1.0, 1.0},
        {CostMethod::LchsIP, 0.0, 1.0, 1.0, 2.0},
    };
    for (const auto& row : table) {
        const auto fit = fit_exponents(row.m, audit_base_model(alpha, sigma));
        const char* name = to_string(row.m);
        EXPECT_NEAR(fit.d, row.d, 0.05) << name;
        EXPECT_NEAR(fit.inv_eps, row.inv_eps, 0.05) << name;
        EXPECT_NEAR(fit.T, row.T, 0.05) << name;
        EXPECT_NEAR(fit.norm, row.norm, 0.05) << name;
    }
}

TEST(Carleman, EncodingCost) {
    EXPECT_EQ(carleman_encoding_cost(3, 2, 8, 1).factor, 384.0);
    EXPECT_EQ(carleman_encoding_cost(1, 3, 4, 0.5).factor, std::pow(3.0, 0.5) * 4.0);
    const auto a = carleman_encoding_cost(2, 2, 16, 1.5), b = carleman_encoding_cost(4, 2, 16, 1.5);
    EXPECT_DOUBLE_EQ(b.factor, 2 * a.factor);
    EXPECT_EQ(b.queries, 2 * a.queries);
    EXPECT_THROW(carleman_encoding_cost(0, 1, 1, 1), InputError);
}

TEST(FitSlope, ExactPowerLaw) {
    EXPECT_NEAR(fit_loglog_slope({1, 2, 4, 8}, {3, 12, 48, 192}), 2.0, 1e-14);
    EXPECT_THROW(fit_loglog_slope({1}, {1}), InputError);
}
