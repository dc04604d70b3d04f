#include <doctest.h>

#include <cmath>
#include <random>

#include "sigpath/window.hpp"
#include "test_util.hpp"

using namespace sigpath;
using sigpath::testing::random_polyline;

namespace {

double max_abs_diff(const Signature& a, const Signature& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.data().size(); ++i)
        m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
    return m;
}

}  // namespace

TEST_CASE("q = 0 is the whole-path signature") {
    std::mt19937_64 rng(1);
    for (int trial = 0; trial < 10; ++trial) {
        const auto path = random_polyline(rng, 2, 7);
        CHECK(dyadic_features(path, {0, 3}) == flatten(polyline_signature(path, 3)));
        CHECK(dyadic_features(path, {0, 3}, true) == flatten(polyline_signature(path, 3), true));
    }
}

TEST_CASE("feature length is 2^q times the count") {
    std::mt19937_64 rng(2);
    CHECK(dyadic_features(random_polyline(rng, 2, 5), {1, 2}).size() == 12);
    for (std::size_t q = 0; q <= 4; ++q)
        for (std::size_t k = 0; k <= 4; ++k)
            for (std::size_t d = 1; d <= 3; ++d) {
                const auto path = random_polyline(rng, d, 6);
                const std::size_t expected = (std::size_t{1} << q) * feature_count(d, k);
                CHECK(dyadic_features(path, {q, k}).size() == expected);
                CHECK(dyadic_feature_count(d, {q, k}) == expected);
                CHECK(dyadic_signatures(path, {q, k}).size() == (std::size_t{1} << q));
            }
}

TEST_CASE("windows Chen-fold to the parent at every level") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        const auto path = random_polyline(rng, 1 + static_cast<std::size_t>(trial % 3), 9);
        const auto whole = polyline_signature(path, 4);
        for (std::size_t q = 1; q <= 3; ++q) {
            const auto windows = dyadic_signatures(path, {q, 4});
            const auto parents = dyadic_signatures(path, {q - 1, 4});
            for (std::size_t j = 0; j < parents.size(); ++j)
                CHECK(max_abs_diff(chen_concat(windows[2 * j], windows[2 * j + 1]), parents[j]) < 1e-10);
            Signature folded(path.dim(), 4);
            for (const auto& w : windows)
                folded = chen_concat(folded, w);
            CHECK(max_abs_diff(folded, whole) < 1e-10);
        }
    }
}

TEST_CASE("a window with no interior vertex is a segment") {
    // two vertices: every window is a sub-segment of the one edge
    const Polyline path(2, {0.0, 0.0, 2.0, -1.0});
    const auto windows = dyadic_signatures(path, {2, 3});
    for (const auto& w : windows) {
        const double delta[] = {0.5, -0.25};
        CHECK(max_abs_diff(w, segment_signature(delta, 3)) < 1e-12);
    }
    // many short windows inside one edge of a longer path
    std::mt19937_64 rng(4);
    const auto p = random_polyline(rng, 2, 3);
    const auto ws = dyadic_signatures(p, {3, 3});
    const auto a = p.at(0.125), b = p.at(0.25);
    const double delta[] = {b[0] - a[0], b[1] - a[1]};
    CHECK(max_abs_diff(ws[1], segment_signature(delta, 3)) < 1e-12);
}

TEST_CASE("windows narrower than the sample spacing are legal") {
    const Polyline path(1, {0.0, 1.0});
    const auto windows = dyadic_signatures(path, {6, 2});
    CHECK(windows.size() == 64);
    CHECK(windows[10].level(1)[0] == doctest::Approx(1.0 / 64.0));
    const Polyline single(2, {1.0, 1.0});
    for (const auto& w : dyadic_signatures(single, {2, 2}))
        CHECK(w == Signature(2, 2));
}
