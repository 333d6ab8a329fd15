#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "ergoalg/cylinder_event.hpp"

using namespace ergo;

namespace {

BernoulliCarrier fair() { return BernoulliCarrier::make({rat(1, 2), rat(1, 2)}); }

CylinderEvent random_cyl(const BernoulliCarrier& c, std::mt19937_64& rng, int max_len = 4) {
    std::uniform_int_distribution<int> len(0, max_len), cnt(0, 5), sym(0, c.alphabet - 1),
        pos(-2, 2);
    int n = len(rng), k = cnt(rng);
    std::vector<std::vector<int>> words;
    for (int i = 0; i < k; ++i) {
        std::vector<int> w(n);
        for (auto& s : w) s = sym(rng);
        words.push_back(w);
    }
    return CylinderEvent::from_words(c, pos(rng), words);
}

} // namespace

TEST_CASE("cylinder word basics") {
    auto c = fair();
    auto e = CylinderEvent::word_at(c, 0, {0});
    CHECK(e.measure() == rat(1, 2));
    CHECK(e.window_lo() == 0);
    CHECK(e.window_len() == 1);
    CHECK(complement(e) == CylinderEvent::word_at(c, 0, {1}));
    CHECK(unite(e, CylinderEvent::word_at(c, 0, {1})).is_full());
    CHECK(intersect(e, CylinderEvent::word_at(c, 0, {1})).is_empty());
}

TEST_CASE("window minimality trims full-product boundary coordinates") {
    auto c = fair();
    // {00,01,10,11} over window [0,1] is the full space.
    auto e = CylinderEvent::from_words(c, 0, {{0, 0}, {0, 1}, {1, 0}, {1, 1}});
    CHECK(e.is_full());
    // {00,10} = [x1=0]: leading coordinate trimmed.
    auto f = CylinderEvent::from_words(c, 0, {{0, 0}, {1, 0}});
    CHECK(f == CylinderEvent::word_at(c, 1, {0}));
    // {00,01} = [x0=0]: trailing coordinate trimmed.
    auto g = CylinderEvent::from_words(c, 0, {{0, 0}, {0, 1}});
    CHECK(g == CylinderEvent::word_at(c, 0, {0}));
}

TEST_CASE("cylinder measure on unbalanced probabilities") {
    auto c = BernoulliCarrier::make({rat(1, 3), rat(2, 3)});
    CHECK(CylinderEvent::word_at(c, 0, {0}).measure() == rat(1, 3));
    CHECK(CylinderEvent::word_at(c, 5, {1, 1}).measure() == rat(4, 9));
    auto u = unite(CylinderEvent::word_at(c, 0, {0, 0}), CylinderEvent::word_at(c, 0, {1}));
    CHECK(u.measure() == rat(1, 9) + rat(2, 3));
}

TEST_CASE("windows align across different coordinates") {
    auto c = fair();
    auto a = CylinderEvent::word_at(c, 0, {0});
    auto b = CylinderEvent::word_at(c, 2, {1});
    auto both = intersect(a, b);
    CHECK(both.measure() == rat(1, 4));
    CHECK(both.window_len() == 3);
    CHECK(unite(a, b).measure() == rat(3, 4));
}

TEST_CASE("shift is exactly measure preserving and reindexes coordinates") {
    auto c = fair();
    auto e = CylinderEvent::from_words(c, 0, {{0, 1}, {1, 0}});
    auto s = e.shifted(3);
    CHECK(s.measure() == e.measure());
    CHECK(s.window_lo() == 3);
    CHECK(s == CylinderEvent::from_words(c, 3, {{0, 1}, {1, 0}}));
}

TEST_CASE("word_count and list_words") {
    auto c = fair();
    auto e = CylinderEvent::from_words(c, 0, {{0, 1, 0}, {1, 1, 0}, {0, 0, 0}});
    CHECK(e.word_count() == 3);
    std::vector<std::vector<int>> words;
    CHECK(e.list_words(words, 100));
    CHECK(words.size() == 3);
    CHECK(words[0] == std::vector<int>{0, 0, 0});
}

TEST_CASE("boolean algebra laws on random cylinder events") {
    auto c = fair();
    std::mt19937_64 rng(23);
    for (int t = 0; t < 150; ++t) {
        auto a = random_cyl(c, rng);
        auto b = random_cyl(c, rng);
        CHECK(complement(unite(a, b)) == intersect(complement(a), complement(b)));
        CHECK(unite(a, b).measure() + intersect(a, b).measure() == a.measure() + b.measure());
        CHECK(symdiff(a, b).measure() == rho(a, b));
        CHECK(complement(complement(a)) == a);
        CHECK(subset(intersect(a, b), a));
    }
}

TEST_CASE("canonical equality is representation independent") {
    auto c = fair();
    auto a = unite(CylinderEvent::word_at(c, 0, {0, 0}), CylinderEvent::word_at(c, 0, {0, 1}));
    auto b = CylinderEvent::word_at(c, 0, {0});
    CHECK(a == b);
    auto u1 = unite(CylinderEvent::word_at(c, 1, {1}), CylinderEvent::word_at(c, 0, {0}));
    auto u2 = unite(CylinderEvent::word_at(c, 0, {0}), CylinderEvent::word_at(c, 1, {1}));
    CHECK(u1 == u2);
}

TEST_CASE("scanner construction matches word enumeration") {
    auto c = fair();
    // Accept words of length 4 containing a run of two 0s. State: trailing
    // zero-run (capped) plus a sticky bit.
    CylinderEvent::Scanner sc;
    sc.window_lo = 0;
    sc.window_len = 4;
    sc.init = 0;
    sc.step = [](std::uint64_t st, long, int sym) -> std::pair<bool, std::uint64_t> {
        std::uint64_t run = st & 0xff, flag = st >> 8;
        run = sym == 0 ? run + 1 : 0;
        if (run >= 2) { flag = 1; run = 2; }
        return {true, (flag << 8) | run};
    };
    sc.accept = [](std::uint64_t st) { return (st >> 8) != 0; };
    auto scanned = CylinderEvent::from_scanner(c, sc);
    std::vector<std::vector<int>> expect;
    for (int m = 0; m < 16; ++m) {
        std::vector<int> w{(m >> 3) & 1, (m >> 2) & 1, (m >> 1) & 1, m & 1};
        for (int i = 0; i + 1 < 4; ++i)
            if (w[i] == 0 && w[i + 1] == 0) { expect.push_back(w); break; }
    }
    CHECK(scanned == CylinderEvent::from_words(c, 0, expect));
}
