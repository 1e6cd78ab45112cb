#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "pairloc/operators.hpp"

using namespace pairloc;

namespace {

PotentialSample zero_sample(index_t a, index_t b) {
    PotentialSample V;
    V.window = Segment(a, b);
    V.values.assign(static_cast<std::size_t>(b - a + 1), 0.0);
    return V;
}

PotentialSample random_sample(index_t a, index_t b, std::uint64_t seed) {
    DisorderSpec spec{DistributionKind::gaussian, 1.0, 1.0, seed};
    return sample_potential(spec, Segment(a, b), 0);
}

bool nearest_neighbors(Site2 u, Site2 v) {
    return std::abs(u.x1 - v.x1) + std::abs(u.x2 - v.x2) == 1;
}

}  // namespace

TEST_CASE("single-site segment operator") {
    auto V = zero_sample(3, 3);
    V.values[0] = 2.5;
    const auto h = build_h1(Segment(3, 3), V, 1.0);
    REQUIRE(h.dim() == 1);
    CHECK(h.matrix(0, 0) == 2.5);
}

TEST_CASE("free 3-site path spectrum is {-sqrt2, 0, sqrt2}") {
    const auto V = zero_sample(0, 2);
    const auto h = build_h1(Segment(0, 2), V, 0.0);
    const auto evs = eigenvalues_only(h);
    REQUIRE(evs.size() == 3);
    CHECK(evs(0) == doctest::Approx(-std::sqrt(2.0)).epsilon(1e-12));
    CHECK(evs(1) == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
    CHECK(evs(2) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
}

TEST_CASE("free segment row sums bounded by the degree") {
    const auto V = zero_sample(-5, 5);
    const auto h = build_h1(Segment(-5, 5), V, 0.0);
    for (Eigen::Index i = 0; i < h.dim(); ++i) {
        CHECK(h.matrix.row(i).cwiseAbs().sum() <= 2.0);
    }
}

TEST_CASE("coverage errors") {
    const auto V = zero_sample(0, 3);
    CHECK_THROWS_AS(build_h1(Segment(0, 5), V, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(build_h2_ni(Segment(0, 5), Segment(0, 2), V, 1.0), std::invalid_argument);
}

TEST_CASE("fermionic 2x2 clipped square reduces to one site") {
    auto V = random_sample(0, 1, 5);
    InteractionSpec inter(1, {4.0, 7.0});
    const real g = 2.0;
    const auto h = build_h2(SubSquare(Segment(0, 1), Segment(0, 1), true), V, inter, g,
                            Statistics::fermionic);
    REQUIRE(h.dim() == 1);
    REQUIRE(h.basis[0] == Site2{1, 0});
    CHECK(h.matrix(0, 0) ==
          doctest::Approx(inter.profile[1] + g * V.at(1) + g * V.at(0)).epsilon(1e-15));
}

TEST_CASE("fermionic basis excludes the diagonal, bosonic keeps it") {
    const auto V = zero_sample(-3, 3);
    const SubSquare sq = SubSquare::centered({0, 0}, 2, true);
    const auto hf = build_h2(sq, V, InteractionSpec::none(), 0.0, Statistics::fermionic);
    for (const Site2& s : hf.basis) CHECK(s.x1 > s.x2);
    const auto hb = build_h2(sq, V, InteractionSpec::none(), 0.0, Statistics::bosonic);
    int diag = 0;
    for (const Site2& s : hb.basis) diag += (s.x1 == s.x2) ? 1 : 0;
    CHECK(diag == 5);  // every diagonal site of the window
    CHECK(hb.dim() == hf.dim() + 5);
}

TEST_CASE("fermionic on a 1-site diagonal square has no basis") {
    const auto V = zero_sample(0, 0);
    CHECK_THROWS_AS(build_h2(SubSquare(Segment(0, 0), Segment(0, 0), true), V,
                             InteractionSpec::none(), 0.0, Statistics::fermionic),
                    std::invalid_argument);
}

TEST_CASE("produced matrices are exactly symmetric with neighbor-only hopping") {
    const auto V = random_sample(-4, 6, 17);
    InteractionSpec inter(1, {1.0, -0.5});
    for (const Statistics stat : {Statistics::bosonic, Statistics::fermionic}) {
        const auto h = build_h2(SubSquare::centered({1, 0}, 3, true), V, inter, 2.5, stat);
        CHECK((h.matrix - h.matrix.transpose()).cwiseAbs().maxCoeff() == 0.0);
        for (Eigen::Index i = 0; i < h.dim(); ++i)
            for (Eigen::Index j = 0; j < h.dim(); ++j) {
                if (i == j || h.matrix(i, j) == 0.0) continue;
                CHECK(nearest_neighbors(h.basis[static_cast<std::size_t>(i)],
                                        h.basis[static_cast<std::size_t>(j)]));
            }
    }
}

TEST_CASE("bosonic diagonal stencil carries weight 2") {
    const auto V = zero_sample(-2, 2);
    const auto h = build_h2(SubSquare::centered({0, 0}, 1, true), V, InteractionSpec::none(), 0.0,
                            Statistics::bosonic);
    // weight 2 between (0,0) and (1,0); weight 2 between (0,0) and (0,-1)
    const auto i00 = h.index_of({0, 0});
    CHECK(h.matrix(i00, h.index_of({1, 0})) == 2.0);
    CHECK(h.matrix(i00, h.index_of({0, -1})) == 2.0);
    // weight 1 between off-diagonal neighbors
    CHECK(h.matrix(h.index_of({1, 0}), h.index_of({1, -1})) == 1.0);
    // free bosonic row sums bounded by 2 * degree
    for (Eigen::Index i = 0; i < h.dim(); ++i)
        CHECK(h.matrix.row(i).cwiseAbs().sum() <= 8.0);
}

TEST_CASE("free fermionic square row sums bounded by the degree") {
    const auto V = zero_sample(-4, 4);
    const auto h = build_h2(SubSquare::centered({2, -1}, 2, true), V, InteractionSpec::none(), 0.0,
                            Statistics::fermionic);
    for (Eigen::Index i = 0; i < h.dim(); ++i) CHECK(h.matrix.row(i).cwiseAbs().sum() <= 4.0);
}

TEST_CASE("off-diagonal squares are statistics-blind and interaction-free") {
    const auto V = random_sample(-8, 8, 3);
    InteractionSpec inter(2, {9.0, 9.0, 9.0});
    const SubSquare sq = SubSquare::centered({5, -3}, 2, true);  // min diff 4 > d
    REQUIRE(classify_diagonal(sq, DiagonalStrip(inter.d)) == DiagonalClass::off_diagonal);
    const auto hf = build_h2(sq, V, inter, 1.5, Statistics::fermionic);
    const auto hb = build_h2(sq, V, inter, 1.5, Statistics::bosonic);
    const auto hni = build_h2_ni(Segment::centered(5, 2), Segment::centered(-3, 2), V, 1.5);
    CHECK(hf.basis == hni.basis);
    CHECK((hf.matrix - hni.matrix).cwiseAbs().maxCoeff() == 0.0);
    CHECK((hb.matrix - hni.matrix).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("non-interacting product operator") {
    SUBCASE("1x1 product") {
        auto V = zero_sample(0, 9);
        V.values[2] = 1.0;
        V.values[7] = -2.0;
        const auto h = build_h2_ni(Segment(2, 2), Segment(7, 7), V, 3.0);
        REQUIRE(h.dim() == 1);
        CHECK(h.matrix(0, 0) == doctest::Approx(3.0 * (1.0 - 2.0)));
    }
    SUBCASE("free 2x2 product spectrum is {-2, 0, 0, 2}") {
        const auto V = zero_sample(0, 9);
        const auto h = build_h2_ni(Segment(0, 1), Segment(5, 6), V, 0.0);
        const auto evs = eigenvalues_only(h);
        REQUIRE(evs.size() == 4);
        CHECK(evs(0) == doctest::Approx(-2.0).epsilon(1e-12));
        CHECK(evs(1) == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
        CHECK(evs(2) == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
        CHECK(evs(3) == doctest::Approx(2.0).epsilon(1e-12));
    }
}

TEST_CASE("tensor-sum identity") {
    const auto V = random_sample(-10, 10, 123);
    const Segment segA(-10, -4), segB(2, 10);
    const auto h1a = build_h1(segA, V, 1.7);
    const auto h1b = build_h1(segB, V, 1.7);
    const auto h2 = build_h2_ni(segA, segB, V, 1.7);
    CHECK(tensor_sum_check(h1a, h1b, h2, 1e-9));
    SUBCASE("a perturbed entry breaks it") {
        auto h2p = h2;
        h2p.matrix(0, 0) += 1.0;
        CHECK_FALSE(tensor_sum_check(h1a, h1b, h2p, 1e-9));
    }
    SUBCASE("1x1 factors") {
        const auto a1 = build_h1(Segment(-10, -10), V, 1.7);
        const auto b1 = build_h1(Segment(2, 2), V, 1.7);
        const auto p = build_h2_ni(Segment(-10, -10), Segment(2, 2), V, 1.7);
        CHECK(tensor_sum_check(a1, b1, p, 1e-12));
    }
    SUBCASE("dimension mismatch") {
        CHECK_THROWS_AS(tensor_sum_check(h1a, h1a, h2, 1e-9), std::invalid_argument);
    }
}

TEST_CASE("build_h2 rejects windows above the diagonal") {
    const auto V = zero_sample(-5, 5);
    CHECK_THROWS_AS(build_h2(SubSquare(Segment(0, 2), Segment(1, 4), false), V,
                             InteractionSpec::none(), 0.0, Statistics::fermionic),
                    std::invalid_argument);
}

TEST_CASE("triplet dump roundtrips the basis header") {
    const auto V = zero_sample(0, 2);
    const auto h = build_h1(Segment(0, 2), V, 0.0);
    std::ostringstream os;
    dump_triplets(h, os);
    const std::string s = os.str();
    CHECK(s.find("# basis 3") == 0);
    CHECK(s.find("0 1 1") != std::string::npos);
}
