#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "ergoalg/algebra.hpp"
#include "ergoalg/event.hpp"

using namespace ergo;

namespace {

Event iv(long a, long b, long c, long d) {
    return interval_event({{rat(a, b), rat(c, d)}});
}

// Random interval event with endpoints on the 1/64 grid.
Event random_interval_event(std::mt19937_64& rng) {
    std::uniform_int_distribution<int> cnt(0, 3), pos(0, 64);
    std::vector<std::pair<Rat, Rat>> raw;
    int n = cnt(rng);
    for (int i = 0; i < n; ++i) {
        int a = pos(rng), b = pos(rng);
        if (a > b) std::swap(a, b);
        raw.push_back({rat(a, 64), rat(b, 64)});
    }
    return interval_event(std::move(raw));
}

} // namespace

TEST_CASE("normalize merges, drops and sorts interval pieces") {
    CHECK(interval_event({{rat(0, 1), rat(1, 2)}, {rat(1, 2), rat(3, 4)}}) == iv(0, 1, 3, 4));
    CHECK(interval_event({{rat(1, 4), rat(1, 4)}}) == Event(IntervalEvent::empty()));
    Event sorted = interval_event({{rat(1, 2), rat(1, 1)}, {rat(0, 1), rat(1, 4)}});
    CHECK(sorted == interval_event({{rat(0, 1), rat(1, 4)}, {rat(1, 2), rat(1, 1)}}));
    CHECK_THROWS_AS(interval_event({{rat(1, 2), rat(1, 4)}}), domain_error);
    CHECK_THROWS_AS(interval_event({{rat(-1, 4), rat(1, 4)}}), domain_error);
    CHECK_THROWS_AS(interval_event({{rat(1, 2), rat(5, 4)}}), domain_error);
}

TEST_CASE("boolean ops on interval events") {
    Event x = Event(IntervalEvent::full());
    CHECK(complement(x).is_empty());
    CHECK(intersect(iv(0, 1, 1, 2), iv(1, 4, 3, 4)) == iv(1, 4, 1, 2));
    Event sd = symdiff(iv(0, 1, 1, 2), iv(1, 4, 3, 4));
    CHECK(sd == interval_event({{rat(0, 1), rat(1, 4)}, {rat(1, 2), rat(3, 4)}}));
}

TEST_CASE("measure and rho basics") {
    Event e = interval_event({{rat(0, 1), rat(1, 4)}, {rat(1, 2), rat(3, 4)}});
    CHECK(e.measure() == rat(1, 2));
    CHECK(rho(iv(0, 1, 1, 2), iv(0, 1, 1, 2)) == Rat(0));
    CHECK(rho(iv(0, 1, 1, 2), iv(1, 4, 3, 4)) == rat(1, 2));
    CHECK(rho(Event(IntervalEvent::empty()), Event(IntervalEvent::full())) == Rat(1));
}

TEST_CASE("generated_algebra") {
    Carrier c = IntervalCarrier{};
    auto a = generated_algebra({iv(0, 1, 1, 2), iv(1, 4, 3, 4)}, c);
    REQUIRE(a.size() == 4);
    CHECK(a.atoms()[0] == iv(0, 1, 1, 4));
    CHECK(a.atoms()[1] == iv(1, 4, 1, 2));
    CHECK(a.atoms()[2] == iv(1, 2, 3, 4));
    CHECK(a.atoms()[3] == iv(3, 4, 1, 1));

    auto triv = generated_algebra({}, c);
    CHECK(triv.is_trivial());

    auto idem = generated_algebra({iv(0, 1, 1, 2), iv(0, 1, 1, 2)}, c);
    CHECK(idem.size() == 2);
}

TEST_CASE("measure is finitely additive on random disjoint pairs") {
    std::mt19937_64 rng(7);
    for (int t = 0; t < 200; ++t) {
        Event a = random_interval_event(rng);
        Event b = subtract(random_interval_event(rng), a);
        CHECK(unite(a, b).measure() == a.measure() + b.measure());
    }
}

TEST_CASE("rho triangle inequality, exactly, on random triples") {
    std::mt19937_64 rng(11);
    for (int t = 0; t < 200; ++t) {
        Event a = random_interval_event(rng);
        Event b = random_interval_event(rng);
        Event c = random_interval_event(rng);
        CHECK(rho(a, c) <= rho(a, b) + rho(b, c));
    }
}

TEST_CASE("boolean ops are representative independent") {
    // Building from unsorted overlapping raw pieces and normalizing first or
    // after unions gives identical canonical forms.
    std::mt19937_64 rng(13);
    for (int t = 0; t < 100; ++t) {
        Event a = random_interval_event(rng);
        Event b = random_interval_event(rng);
        std::vector<std::pair<Rat, Rat>> raw;
        for (const auto& p : a.as_interval().pieces()) raw.push_back(p);
        for (const auto& p : b.as_interval().pieces()) raw.push_back(p);
        CHECK(interval_event(std::move(raw)) == unite(a, b));
    }
}

TEST_CASE("De Morgan on random pairs") {
    std::mt19937_64 rng(17);
    for (int t = 0; t < 200; ++t) {
        Event a = random_interval_event(rng);
        Event b = random_interval_event(rng);
        CHECK(complement(unite(a, b)) == intersect(complement(a), complement(b)));
        CHECK(complement(intersect(a, b)) == unite(complement(a), complement(b)));
    }
}

TEST_CASE("generated_algebra atoms partition the space") {
    std::mt19937_64 rng(19);
    Carrier c = IntervalCarrier{};
    for (int t = 0; t < 50; ++t) {
        std::vector<Event> gens;
        for (int i = 0; i < 3; ++i) gens.push_back(random_interval_event(rng));
        auto alg = generated_algebra(gens, c);
        Rat total = 0;
        for (std::size_t i = 0; i < alg.size(); ++i) {
            total += alg.atoms()[i].measure();
            for (std::size_t j = i + 1; j < alg.size(); ++j)
                CHECK(intersect(alg.atoms()[i], alg.atoms()[j]).is_empty());
        }
        CHECK(total == Rat(1));
    }
}

TEST_CASE("rect events canonicalize to the fiber partition") {
    ProductCarrier pc{std::make_shared<Carrier>(IntervalCarrier{}),
                      std::make_shared<Carrier>(IntervalCarrier{})};
    // Overlapping rectangles: [0,1/2) x [0,1/2) union [1/4,3/4) x [1/4,3/4).
    Event e = Event::rect_union(pc, {{iv(0, 1, 1, 2), iv(0, 1, 1, 2)}, {iv(1, 4, 3, 4), iv(1, 4, 3, 4)}});
    CHECK(e.measure() == rat(1, 4) + rat(1, 4) - rat(1, 16));
    // Same union described differently must canonicalize identically.
    Event f = Event::rect_union(pc, {{iv(1, 4, 3, 4), iv(1, 4, 3, 4)}, {iv(0, 1, 1, 2), iv(0, 1, 1, 2)}});
    CHECK(e == f);
    // Boolean consistency.
    Event g = intersect(e, Event::rect_union(pc, {{iv(0, 1, 1, 4), Event(IntervalEvent::full())}}));
    CHECK(g.measure() == rat(1, 8));
    CHECK(complement(complement(e)) == e);
}
