#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "sscap/adam.hpp"

using namespace sscap;

TEST_CASE("zero gradient leaves parameters unchanged") {
    Array2 w(2, 2, {1, 2, 3, 4});
    AdamState st;
    GradMap grads{{"w", Array2(2, 2, 0.0)}};
    adam_update({{"w", &w}}, grads, st);
    CHECK(w.data == std::vector<double>{1, 2, 3, 4});
    CHECK(st.t == 1);
}

TEST_CASE("first step moves by roughly lr in the gradient direction") {
    Array2 w(1, 1, 1.0);
    AdamState st;
    GradMap grads{{"w", Array2(1, 1, 0.5)}};
    adam_update({{"w", &w}}, grads, st);
    CHECK(std::fabs(w.scalar() - (1.0 - 5e-4)) < 1e-9);
}

TEST_CASE("three steps on a quadratic match a hand recurrence") {
    Array2 w(1, 1, 0.0);
    AdamState st;
    // Independent scalar recurrence, stepped by hand.
    double hw = 0.0, m = 0.0, v = 0.0;
    const double lr = 5e-4, b1 = 0.9, b2 = 0.999, eps = 1e-8;
    for (int t = 1; t <= 3; ++t) {
        {
            const double g = 2.0 * (hw - 2.0);
            m = b1 * m + (1 - b1) * g;
            v = b2 * v + (1 - b2) * g * g;
            const double mhat = m / (1 - std::pow(b1, t));
            const double vhat = v / (1 - std::pow(b2, t));
            hw -= lr * mhat / (std::sqrt(vhat) + eps);
        }
        GradMap grads{{"w", Array2(1, 1, 2.0 * (w.scalar() - 2.0))}};
        adam_update({{"w", &w}}, grads, st);
        CHECK(std::fabs(w.scalar() - hw) < 1e-12);
    }
    CHECK(st.t == 3);
}

TEST_CASE("missing gradient is an error") {
    Array2 w(1, 1, 1.0);
    AdamState st;
    GradMap grads;
    CHECK_THROWS_WITH_AS(adam_update({{"w", &w}}, grads, st), doctest::Contains("w"),
                         std::invalid_argument);
}

TEST_CASE("gradient shape mismatch is an error") {
    Array2 w(1, 2, 1.0);
    AdamState st;
    GradMap grads{{"w", Array2(2, 1, 1.0)}};
    CHECK_THROWS_AS(adam_update({{"w", &w}}, grads, st), std::invalid_argument);
}

TEST_CASE("only the named subset is touched") {
    Array2 a(1, 1, 1.0), b(1, 1, 1.0);
    AdamState st;
    GradMap grads{{"a", Array2(1, 1, 1.0)}};
    adam_update({{"a", &a}}, grads, st);
    CHECK(a.scalar() != 1.0);
    CHECK(b.scalar() == 1.0);
    CHECK(st.m.count("a") == 1);
    CHECK(st.m.count("b") == 0);
}
