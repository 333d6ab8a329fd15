#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "ergoalg/entropy.hpp"

using namespace ergo;

namespace {

Event iv(long a, long b, long c, long d) {
    return interval_event({{rat(a, b), rat(c, d)}});
}

BernoulliCarrier fair() { return BernoulliCarrier::make({rat(1, 2), rat(1, 2)}); }

FiniteAlgebra halves() {
    return FiniteAlgebra::from_atoms({iv(0, 1, 1, 2), iv(1, 2, 1, 1)});
}

FiniteAlgebra generator(const BernoulliCarrier& c) {
    std::vector<Event> atoms;
    for (int s = 0; s < c.alphabet; ++s) atoms.push_back(Event(CylinderEvent::word_at(c, 0, {s})));
    return FiniteAlgebra::from_atoms(std::move(atoms));
}

// random algebra from random dyadic generator events
FiniteAlgebra random_algebra(std::mt19937_64& rng, int gens = 2, int res = 16) {
    std::uniform_int_distribution<int> pos(0, res);
    std::vector<Event> g;
    for (int i = 0; i < gens; ++i) {
        int a = pos(rng), b = pos(rng);
        if (a > b) std::swap(a, b);
        if (a == b) continue;
        g.push_back(interval_event(rat(a, res), rat(b, res)));
    }
    return generated_algebra(g, IntervalCarrier{});
}

} // namespace

TEST_CASE("entropy closed forms") {
    auto h = entropy(halves());
    CHECK(std::abs(h.value - std::log(2.0)) < 1e-14);
    CHECK(entropy(halves(), halves()).value == 0.0);
    auto quarters = FiniteAlgebra::from_atoms(
        {iv(0, 1, 1, 4), iv(1, 4, 1, 2), iv(1, 2, 3, 4), iv(3, 4, 1, 1)});
    CHECK(std::abs(entropy(quarters).value - 2 * std::log(2.0)) < 1e-14);
    CHECK(h.cell_count() == 2);
}

TEST_CASE("h_sequence Bernoulli generator is constant ln 2") {
    auto S = System::make(Transformation::shift(fair()));
    auto hs = h_sequence(S, generator(fair()), 4);
    for (const auto& v : hs.conditional) CHECK(std::abs(v.value - std::log(2.0)) < 1e-12);
    for (const auto& v : hs.cesaro) CHECK(std::abs(v.value - std::log(2.0)) < 1e-12);
}

TEST_CASE("h_sequence odometer halves vanishes") {
    auto S = System::make(Transformation::odometer(2));
    auto hs = h_sequence(S, halves(), 2);
    CHECK(hs.conditional[0].value == 0.0);
    CHECK(hs.conditional[1].value == 0.0);
}

TEST_CASE("h_sequence identity map") {
    auto S = System::make(Transformation::iet(IetMap::identity()));
    auto hs = h_sequence(S, halves(), 3);
    for (const auto& v : hs.conditional) CHECK(v.value == 0.0);
}

TEST_CASE("conditional list is non-increasing") {
    std::mt19937_64 rng(79);
    auto S = System::make(Transformation::odometer(2));
    for (int t = 0; t < 10; ++t) {
        auto A = random_algebra(rng);
        auto hs = h_sequence(S, A, 4);
        for (std::size_t k = 1; k < hs.conditional.size(); ++k)
            CHECK(hs.conditional[k].value <= hs.conditional[k - 1].value + 1e-12);
    }
}

TEST_CASE("transformal independence") {
    auto S = System::make(Transformation::shift(fair()));
    CHECK(is_transformally_independent_upto(S, generator(fair()), 5));
    auto O = System::make(Transformation::odometer(2));
    CHECK_FALSE(is_transformally_independent_upto(O, halves(), 1));
    auto I = System::make(Transformation::iet(IetMap::identity()));
    CHECK_FALSE(is_transformally_independent_upto(I, halves(), 1));
}

TEST_CASE("transformal definability") {
    auto O = System::make(Transformation::odometer(2));
    auto r = is_transformally_definable_upto(O, halves(), 1, 0.0);
    CHECK(r.definable);
    CHECK(r.exact_path);
    auto S = System::make(Transformation::shift(fair()));
    auto r2 = is_transformally_definable_upto(S, generator(fair()), 8, 1e-9);
    CHECK_FALSE(r2.definable);
    CHECK_FALSE(r2.exact_path);
    CHECK(std::abs(r2.conditional_entropy - std::log(2.0)) < 1e-9);
    auto I = System::make(Transformation::iet(IetMap::identity()));
    CHECK(is_transformally_definable_upto(I, halves(), 1, 0.0).definable);
}

TEST_CASE("entropy additivity on random algebras") {
    std::mt19937_64 rng(83);
    for (int t = 0; t < 40; ++t) {
        auto A = random_algebra(rng);
        auto C = random_algebra(rng);
        auto D = random_algebra(rng, 1);
        double lhs = entropy(join(A, C), D).value;
        double rhs = entropy(A, D).value + entropy(C, join(A, D)).value;
        CHECK(std::abs(lhs - rhs) < 1e-9);
    }
}

TEST_CASE("entropy monotonicity and conditioning inequalities") {
    std::mt19937_64 rng(89);
    for (int t = 0; t < 40; ++t) {
        auto A = random_algebra(rng);
        auto C = random_algebra(rng);
        auto D = random_algebra(rng, 1);
        // refinement: A <= join(A,C)
        CHECK(entropy(A, D).value <= entropy(join(A, C), D).value + 1e-12);
        CHECK(entropy(A, D).value >= entropy(A, join(C, D)).value - 1e-12);
    }
}

TEST_CASE("entropy invariance under pullback") {
    std::mt19937_64 rng(97);
    auto odo = Transformation::odometer(2);
    auto rot = Transformation::iet(IetMap::rotation(rat(3, 16)));
    for (int t = 0; t < 20; ++t) {
        auto A = random_algebra(rng);
        auto D = random_algebra(rng, 1);
        for (const auto& T : {odo, rot}) {
            std::vector<Event> pa, pd;
            for (const auto& e : A.atoms()) pa.push_back(map_event(T, e, Dir::inverse));
            for (const auto& e : D.atoms()) pd.push_back(map_event(T, e, Dir::inverse));
            auto Ai = FiniteAlgebra::from_atoms(pa);
            auto Di = FiniteAlgebra::from_atoms(pd);
            CHECK(std::abs(entropy(Ai, Di).value - entropy(A, D).value) < 1e-12);
        }
    }
}
