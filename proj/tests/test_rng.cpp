#include <doctest.h>

#include <cmath>

#include "gridshield/rng.hpp"

using gridshield::Rng;

TEST_CASE("rng streams are deterministic and tag-separated") {
    Rng a(42), b(42);
    for (int i = 0; i < 100; ++i) CHECK(a.bits() == b.bits());

    const auto s1 = gridshield::derive_seed(42, "grid");
    const auto s2 = gridshield::derive_seed(42, "net", 0);
    const auto s3 = gridshield::derive_seed(42, "net", 1);
    CHECK(s1 != s2);
    CHECK(s2 != s3);
    CHECK(s1 == gridshield::derive_seed(42, "grid"));
}

TEST_CASE("variate transforms match their first moments") {
    Rng rng(7);
    const int n = 200000;
    double su = 0.0, sg = 0.0, sg2 = 0.0, se = 0.0;
    for (int i = 0; i < n; ++i) su += rng.uniform();
    for (int i = 0; i < n; ++i) {
        const double g = rng.gaussian();
        sg += g;
        sg2 += g * g;
    }
    for (int i = 0; i < n; ++i) se += rng.exponential(2.0);
    CHECK(su / n == doctest::Approx(0.5).epsilon(0.01));
    CHECK(sg / n == doctest::Approx(0.0).epsilon(0.02));
    CHECK(sg2 / n == doctest::Approx(1.0).epsilon(0.02));
    CHECK(se / n == doctest::Approx(0.5).epsilon(0.02));

    double sp = 0.0;
    for (int i = 0; i < 20000; ++i) sp += static_cast<double>(rng.poisson(3.5));
    CHECK(sp / 20000 == doctest::Approx(3.5).epsilon(0.03));
}

TEST_CASE("distinct picks are distinct and in range") {
    Rng rng(3);
    for (int trial = 0; trial < 50; ++trial) {
        const auto pick = rng.distinct(4, 10);
        CHECK(pick.size() == 4);
        for (std::size_t i = 0; i < pick.size(); ++i) {
            CHECK(pick[i] >= 0);
            CHECK(pick[i] < 10);
            for (std::size_t j = i + 1; j < pick.size(); ++j) CHECK(pick[i] != pick[j]);
        }
    }
}
