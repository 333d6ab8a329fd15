#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "ergoalg/conditioning.hpp"

using namespace ergo;

namespace {

Event iv(long a, long b, long c, long d) {
    return interval_event({{rat(a, b), rat(c, d)}});
}

FiniteAlgebra dyadic(int k) {
    std::vector<Event> atoms;
    long n = 1L << k;
    for (long i = 0; i < n; ++i) atoms.push_back(interval_event(rat(i, n), rat(i + 1, n)));
    return FiniteAlgebra::from_atoms(std::move(atoms));
}

// a random partition of [0,1) into `parts` interval chunks on a grid
std::vector<Event> random_partition(std::mt19937_64& rng, int parts, int res = 64) {
    std::vector<int> cuts{0, res};
    std::uniform_int_distribution<int> pos(0, res);
    for (int i = 0; i < parts - 1; ++i) cuts.push_back(pos(rng));
    std::sort(cuts.begin(), cuts.end());
    std::vector<std::vector<std::pair<Rat, Rat>>> spans(parts);
    std::vector<int> owner(cuts.size() - 1);
    for (std::size_t i = 0; i < owner.size(); ++i) owner[i] = static_cast<int>(i % parts);
    std::shuffle(owner.begin(), owner.end(), rng);
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
        if (cuts[i] < cuts[i + 1])
            spans[owner[i]].push_back({rat(cuts[i], res), rat(cuts[i + 1], res)});
    std::vector<Event> out;
    for (auto& s : spans) out.push_back(interval_event(std::move(s)));
    return out;
}

} // namespace

TEST_CASE("conditional_probability examples") {
    auto C = FiniteAlgebra::from_atoms({iv(0, 1, 1, 4), iv(1, 4, 1, 1)});
    auto g = conditional_probability(iv(0, 1, 1, 2), C);
    CHECK(g.values() == std::vector<Rat>{Rat(1), rat(1, 3)});
    auto triv = FiniteAlgebra::trivial(IntervalCarrier{});
    CHECK(conditional_probability(Event(IntervalEvent::full()), C).values() ==
          std::vector<Rat>{Rat(1), Rat(1)});
    CHECK(conditional_probability(iv(0, 1, 1, 2), triv).values() == std::vector<Rat>{rat(1, 2)});
}

TEST_CASE("reintegration holds exactly on random instances") {
    std::mt19937_64 rng(53);
    std::uniform_int_distribution<int> pos(0, 64);
    for (int t = 0; t < 100; ++t) {
        int x = pos(rng), y = pos(rng);
        if (x > y) std::swap(x, y);
        if (x == y) continue;
        Event a = interval_event(rat(x, 64), rat(y, 64));
        auto C = dyadic(2);
        auto g = conditional_probability(a, C);
        for (unsigned mask = 0; mask < 16; ++mask) {
            Event u = Event(IntervalEvent::empty());
            for (int i = 0; i < 4; ++i)
                if ((mask >> i) & 1) u = unite(u, C.atoms()[i]);
            CHECK(g.integral(u) == intersect(a, u).measure());
        }
    }
}

TEST_CASE("types_equal") {
    auto triv = FiniteAlgebra::trivial(IntervalCarrier{});
    CHECK(types_equal({iv(0, 1, 1, 2)}, {iv(1, 4, 3, 4)}, triv));
    CHECK(types_equal({iv(0, 1, 1, 2)}, {iv(0, 1, 1, 2)}, triv));
    auto halves = FiniteAlgebra::from_atoms({iv(0, 1, 1, 2), iv(1, 2, 1, 1)});
    CHECK(types_equal({iv(0, 1, 1, 2)}, {iv(0, 1, 1, 2)}, halves));
    CHECK_FALSE(types_equal({iv(0, 1, 1, 2)}, {iv(1, 4, 3, 4)}, halves));
    CHECK_THROWS_AS(types_equal({iv(0, 1, 1, 2)}, {}, triv), domain_error);
}

TEST_CASE("types_equal is symmetric and refined by rho on random tuples") {
    std::mt19937_64 rng(59);
    auto triv = FiniteAlgebra::trivial(IntervalCarrier{});
    for (int t = 0; t < 50; ++t) {
        auto p = random_partition(rng, 2);
        auto q = random_partition(rng, 2);
        bool pq = types_equal(p, q, triv);
        CHECK(pq == types_equal(q, p, triv));
        if (rho(p[0], q[0]) == 0 && rho(p[1], q[1]) == 0) CHECK(pq);
    }
}

TEST_CASE("type_distance formula and trivial cases") {
    auto triv = FiniteAlgebra::trivial(IntervalCarrier{});
    std::vector<Event> a{iv(0, 1, 1, 2), iv(1, 2, 1, 1)};
    std::vector<Event> b{iv(0, 1, 1, 4), iv(1, 4, 1, 1)};
    CHECK(type_distance(a, b, triv) == rat(1, 4));
    CHECK(type_distance(a, a, triv) == Rat(0));
    std::vector<Event> e1{Event(IntervalEvent::full()), Event(IntervalEvent::empty())};
    std::vector<Event> e2{Event(IntervalEvent::empty()), Event(IntervalEvent::full())};
    CHECK(type_distance(e1, e2, triv) == Rat(1));
    CHECK_THROWS_AS(type_distance({iv(0, 1, 1, 2), iv(0, 1, 1, 2)}, a, triv), domain_error);
}

TEST_CASE("type_distance over a nontrivial algebra") {
    auto halves = FiniteAlgebra::from_atoms({iv(0, 1, 1, 2), iv(1, 2, 1, 1)});
    std::vector<Event> a{iv(0, 1, 1, 4), Event(complement(iv(0, 1, 1, 4)))};
    std::vector<Event> b{iv(1, 2, 3, 4), Event(complement(iv(1, 2, 3, 4)))};
    // P(a1|halves) = (1/2, 0), P(b1|halves) = (0, 1/2):
    // L1 = |1/2-0|*1/2 + |0-1/2|*1/2 = 1/2
    CHECK(type_distance(a, b, halves) == rat(1, 2));
}

TEST_CASE("type_distance is a pseudometric on random partitions") {
    std::mt19937_64 rng(61);
    auto triv = FiniteAlgebra::trivial(IntervalCarrier{});
    for (int t = 0; t < 60; ++t) {
        auto p = random_partition(rng, 3);
        auto q = random_partition(rng, 3);
        auto r = random_partition(rng, 3);
        Rat dpq = type_distance(p, q, triv);
        CHECK(dpq == type_distance(q, p, triv));
        CHECK(dpq <= type_distance(p, r, triv) + type_distance(r, q, triv));
        if (types_equal(p, q, triv)) CHECK(dpq == 0);
    }
}

TEST_CASE("realize_distance achieves the formula") {
    auto triv = FiniteAlgebra::trivial(IntervalCarrier{});
    std::vector<Event> a{iv(0, 1, 1, 2), iv(1, 2, 1, 1)};
    std::vector<Event> b{iv(0, 1, 1, 4), iv(1, 4, 1, 1)};
    auto r = realize_distance(a, b);
    CHECK(r.a_prime == std::vector<Event>{iv(0, 1, 1, 2), iv(1, 2, 1, 1)});
    CHECK(r.b_prime == std::vector<Event>{iv(0, 1, 1, 4), iv(1, 4, 1, 1)});
    CHECK(r.achieved == rat(1, 4));
    CHECK(types_equal(r.b_prime, b, triv));

    auto same = realize_distance(a, std::vector<Event>{iv(1, 2, 1, 1), iv(0, 1, 1, 2)});
    CHECK(same.achieved == type_distance(a, {iv(1, 2, 1, 1), iv(0, 1, 1, 2)}, triv));

    std::vector<Event> full_first{Event(IntervalEvent::full()), Event(IntervalEvent::empty())};
    std::vector<Event> full_second{Event(IntervalEvent::empty()), Event(IntervalEvent::full())};
    CHECK(realize_distance(full_first, full_second).achieved == Rat(1));
}

TEST_CASE("realize_distance on random partitions") {
    std::mt19937_64 rng(67);
    auto triv = FiniteAlgebra::trivial(IntervalCarrier{});
    for (int t = 0; t < 60; ++t) {
        auto p = random_partition(rng, 3);
        auto q = random_partition(rng, 3);
        auto r = realize_distance(p, q);
        CHECK(r.achieved == type_distance(p, q, triv));
        CHECK(types_equal(r.a_prime, p, triv));
        CHECK(types_equal(r.b_prime, q, triv));
        require_partition(r.b_prime, "test");
    }
}

TEST_CASE("is_independent examples") {
    auto triv = FiniteAlgebra::trivial(IntervalCarrier{});
    Event a = iv(0, 1, 1, 2);
    auto B1 = FiniteAlgebra::from_atoms({iv(1, 4, 3, 4), Event(complement(iv(1, 4, 3, 4)))});
    CHECK(is_independent(a, triv, B1));
    auto B2 = FiniteAlgebra::from_atoms({iv(0, 1, 1, 2), iv(1, 2, 1, 1)});
    CHECK_FALSE(is_independent(a, triv, B2));
    ProductCarrier pc{std::make_shared<Carrier>(IntervalCarrier{}),
                      std::make_shared<Carrier>(IntervalCarrier{})};
    Event rect = Event::rect_union(pc, {{iv(0, 1, 1, 2), Event(IntervalEvent::full())}});
    Event rfac = Event::rect_union(pc, {{Event(IntervalEvent::full()), iv(0, 1, 1, 3)}});
    auto trivp = FiniteAlgebra::trivial(Carrier(pc));
    auto Br = FiniteAlgebra::from_atoms({rfac, complement(rfac)});
    CHECK(is_independent(rect, trivp, Br));
}

TEST_CASE("canonical_base examples") {
    auto triv = FiniteAlgebra::trivial(IntervalCarrier{});
    auto halves = FiniteAlgebra::from_atoms({iv(0, 1, 1, 2), iv(1, 2, 1, 1)});
    auto quarters = FiniteAlgebra::from_atoms(
        {iv(0, 1, 1, 4), iv(1, 4, 1, 2), iv(1, 2, 3, 4), iv(3, 4, 1, 1)});
    CHECK(canonical_base({iv(1, 4, 3, 4)}, halves).is_trivial());
    CHECK(canonical_base({iv(0, 1, 1, 4)}, halves) == halves);
    CHECK(canonical_base({iv(0, 1, 1, 2)}, quarters) == halves);
    CHECK(canonical_base({iv(0, 1, 1, 2)}, triv).is_trivial());
}

TEST_CASE("canonical_base yields independence and is coarsest by merges") {
    std::mt19937_64 rng(71);
    auto quarters = FiniteAlgebra::from_atoms(
        {iv(0, 1, 1, 4), iv(1, 4, 1, 2), iv(1, 2, 3, 4), iv(3, 4, 1, 1)});
    std::uniform_int_distribution<int> pos(0, 16);
    for (int t = 0; t < 40; ++t) {
        int x = pos(rng), y = pos(rng);
        if (x > y) std::swap(x, y);
        if (x == y) continue;
        std::vector<Event> tuple{interval_event(rat(x, 16), rat(y, 16))};
        auto cb = canonical_base(tuple, quarters);
        CHECK(is_independent(tuple, cb, quarters));
        if (cb.size() >= 2) {
            for (std::size_t i = 0; i < cb.size(); ++i)
                for (std::size_t j = i + 1; j < cb.size(); ++j) {
                    std::vector<Event> merged;
                    for (std::size_t k = 0; k < cb.size(); ++k)
                        if (k != i && k != j) merged.push_back(cb.atoms()[k]);
                    merged.push_back(unite(cb.atoms()[i], cb.atoms()[j]));
                    auto coarser = FiniteAlgebra::from_atoms(std::move(merged));
                    CHECK_FALSE(is_independent(tuple, coarser, quarters));
                }
        }
    }
}

TEST_CASE("dcl membership") {
    auto quarters = FiniteAlgebra::from_atoms(
        {iv(0, 1, 1, 4), iv(1, 4, 1, 2), iv(1, 2, 3, 4), iv(3, 4, 1, 1)});
    auto halves = FiniteAlgebra::from_atoms({iv(0, 1, 1, 2), iv(1, 2, 1, 1)});
    CHECK(dcl_membership(iv(0, 1, 1, 4), quarters));
    CHECK_FALSE(dcl_membership(iv(0, 1, 1, 3), halves));
    CHECK(dcl_membership(Event(IntervalEvent::empty()), halves));
}

TEST_CASE("independence transitivity at finite scale") {
    auto digit_event = [](int digit) {
        long n = 1L << digit;
        std::vector<std::pair<Rat, Rat>> raw;
        for (long i = 0; i < n; i += 2) raw.push_back({rat(i, n), rat(i + 1, n)});
        return interval_event(std::move(raw));
    };
    std::vector<Event> a{digit_event(1)};
    auto C = FiniteAlgebra::from_atoms({digit_event(2), complement(digit_event(2))});
    auto B = FiniteAlgebra::from_atoms({digit_event(3), complement(digit_event(3))});
    auto D = FiniteAlgebra::from_atoms({digit_event(4), complement(digit_event(4))});
    REQUIRE(is_independent(a, C, B));
    REQUIRE(is_independent(a, join(C, B), D));
    CHECK(is_independent(a, C, join(B, D)));
}

TEST_CASE("approximate_m_step") {
    auto odo = Transformation::odometer(2);
    auto triv = FiniteAlgebra::trivial(IntervalCarrier{});
    auto r0 = approximate_m_step(iv(0, 1, 1, 2), odo, triv, 0, rat(1, 4));
    CHECK(r0.already_simple);
    CHECK(r0.approx == iv(0, 1, 1, 2));
    CHECK(r0.bound == 0);
    auto r1 = approximate_m_step(iv(0, 1, 1, 3), odo, triv, 0, rat(1, 4));
    CHECK(r1.approx == iv(0, 1, 1, 4));
    CHECK(r1.bound == rat(1, 12));
    CHECK(rho(r1.approx, iv(0, 1, 1, 3)) <= r1.bound);
    auto r2 = approximate_m_step(iv(0, 1, 1, 3), odo, triv, 0, rat(1, 6));
    CHECK(r2.approx == iv(0, 1, 1, 3));
    CHECK(r2.bound == 0);
    // m = 1 cell path on the odometer: the generated algebra lands on grid
    auto r3 = approximate_m_step(iv(0, 1, 1, 3), odo, triv, 1, rat(1, 4));
    CHECK(r3.approx == iv(0, 1, 1, 4));
    auto G = generated_algebra({r3.approx, map_event(odo, r3.approx)}, Carrier(IntervalCarrier{}));
    for (const auto& g : G.atoms()) CHECK(rat_den(g.measure() / rat(1, 4)) == 1);
    CHECK_THROWS_AS(approximate_m_step(iv(0, 1, 1, 3), odo, triv, 0, rat(2, 5)), domain_error);
    // C not aligned with the cell structure
    auto thirds = FiniteAlgebra::from_atoms({iv(0, 1, 1, 3), iv(1, 3, 1, 1)});
    CHECK_THROWS_AS(approximate_m_step(iv(0, 1, 1, 2), odo, thirds, 1, rat(1, 4)), domain_error);
}
