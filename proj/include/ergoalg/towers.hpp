#ifndef ERGOALG_TOWERS_HPP
#define ERGOALG_TOWERS_HPP

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "entropy.hpp"

namespace ergo {

// ---------------------------------------------------------------------------
// Rokhlin towers

// E, tau(E), ..., tau^{n-1}(E) pairwise disjoint; residual = 1 - m(union).
// Both facts are exact rationals, verified on construction.
struct Tower {
    Event base;
    long height = 1;
    std::vector<Event> levels;
    Rat residual;
};

namespace detail {

inline Tower finish_tower(Event base, long n, std::vector<Event> levels, const Rat& eps,
                          bool check_pairwise = true) {
    Tower t;
    t.base = std::move(base);
    t.height = n;
    t.levels = std::move(levels);
    Rat covered = 0;
    for (const auto& l : t.levels) covered += l.measure();
    if (check_pairwise) {
        for (std::size_t i = 0; i < t.levels.size(); ++i)
            for (std::size_t j = i + 1; j < t.levels.size(); ++j)
                if (!intersect(t.levels[i], t.levels[j]).is_empty())
                    throw domain_error("tower levels are not disjoint");
    }
    t.residual = 1 - covered;
    if (t.residual < 0) throw domain_error("tower levels overlap (negative residual)");
    if (t.residual >= eps) throw budget_error("tower residual did not reach the requested bound");
    return t;
}

// Exact odometer tower of height p^K: the orbit of the leftmost cell.
inline std::vector<Event> odometer_cell_orbit(int base, int K, const Config& cfg) {
    Rat cell(1, boost::multiprecision::pow(Int(base), static_cast<unsigned>(K)));
    std::vector<Event> cells;
    Event cur = interval_event(Rat(0), cell);
    auto tau = Transformation::odometer(base);
    Int total = boost::multiprecision::pow(Int(base), static_cast<unsigned>(K));
    long n = total.convert_to<long>();
    cells.reserve(n);
    for (long i = 0; i < n; ++i) {
        cells.push_back(cur);
        if (i + 1 < n) cur = map_event(tau, cur, Dir::forward, cfg);
    }
    return cells;
}

// Height-n regrouping of the exact height-p^K tower: level i is the union of
// orbit cells with index i mod n, below the largest full block.
inline Tower odometer_tower(int base, long n, const Rat& eps, const Config& cfg) {
    // exact when n is a power of the base
    {
        Int pw = 1;
        int k = 0;
        while (pw < n) {
            pw *= base;
            ++k;
        }
        if (pw == n) {
            auto cells = odometer_cell_orbit(base, k, cfg);
            Event b = cells.front();
            return finish_tower(b, n, std::move(cells), eps > 0 ? eps : Rat(1, 1),
                                n <= 64);
        }
    }
    if (eps <= 0) throw domain_error("exact odometer tower needs a power-of-base height");
    // p^K >= n * ceil(1/eps)
    Int need = Int(n) * ((rat_den(eps) + rat_num(eps) - 1) / rat_num(eps));
    int K = 0;
    Int pw = 1;
    while (pw < need) {
        pw *= base;
        ++K;
    }
    auto cells = odometer_cell_orbit(base, K, cfg);
    long total = static_cast<long>(cells.size());
    long blocks = total / n;
    std::vector<Event> levels(n, Event(IntervalEvent::empty()));
    for (long j = 0; j < blocks; ++j)
        for (long i = 0; i < n; ++i) levels[i] = unite(levels[i], cells[j * n + i]);
    return finish_tower(levels[0], n, std::move(levels), eps, true);
}

// Guarded-age tower base for the Bernoulli shift over marker sigma^L: points
// whose first marker start b >= 0 satisfies b = 0 mod n and b <= cap, with
// no marker start in [-(n-1), -1]. tau^i of this set is exactly the age = i
// (mod n) copy, so the n shifts are disjoint by the age classes.
inline CylinderEvent bernoulli_tower_base(const BernoulliCarrier& c, long n, int L, long cap) {
    int sigma = 0;
    for (int s = 1; s < c.alphabet; ++s)
        if (c.probs[s] < c.probs[sigma]) sigma = s;
    long w_lo = -(n - 1);
    long w_len = (cap + L - 1) - w_lo + 1;
    // state: run length (0..L) or ACCEPT sentinel
    constexpr std::uint64_t ACCEPT = ~0ull;
    CylinderEvent::Scanner sc;
    sc.window_lo = w_lo;
    sc.window_len = w_len;
    sc.init = 0;
    sc.step = [=](std::uint64_t st, long layer, int sym) -> std::pair<bool, std::uint64_t> {
        if (st == ACCEPT) return {true, ACCEPT};
        std::uint64_t run = sym == sigma ? st + 1 : 0;
        if (run > static_cast<std::uint64_t>(L)) run = L;
        if (run == static_cast<std::uint64_t>(L)) {
            long pos = w_lo + layer;          // coordinate just read
            long start = pos - L + 1;         // marker start index
            if (start >= -(n - 1) && start <= -1) return {false, 0};
            if (start >= 0) {
                if (start % n == 0) return {true, ACCEPT};
                return {false, 0};
            }
        }
        return {true, run};
    };
    sc.accept = [](std::uint64_t st) { return st == ACCEPT; };
    return CylinderEvent::from_scanner(c, sc);
}

inline Tower bernoulli_tower(const BernoulliCarrier& c, long n, const Rat& eps,
                             const Config& cfg) {
    if (eps <= 0) throw domain_error("Bernoulli towers need eps > 0");
    Rat pmin = c.probs[0];
    for (const auto& p : c.probs) pmin = std::min(pmin, p);
    // marker length from prob(w) < eps/(2n), enlarged on demand
    int L = 1;
    Rat q = pmin;
    while (q * Rat(2 * n) >= eps && L < 64) {
        q *= pmin;
        ++L;
    }
    for (int attempt = 0; attempt < 6; ++attempt, ++L, q *= pmin) {
        // age cap around (1/q) ln(2/eps), found by doubling
        Int inv_q = rat_den(q) / rat_num(q);
        long cap = std::max<long>(4 * n, (inv_q * 2).convert_to<long>());
        for (int round = 0; round < 6; ++round, cap *= 2) {
            CylinderEvent base = bernoulli_tower_base(c, n, L, cap);
            if (base.node_count() > cfg.node_budget)
                throw budget_error("Bernoulli tower automaton exceeds the node budget");
            Rat residual = 1 - Rat(n) * base.measure();
            if (residual >= eps) continue;
            // level disjointness: the levels are exact shifts of the base,
            // so base n shifted(base, d) = empty for d < n settles every pair
            for (long d = 1; d < n; ++d)
                if (!intersect(base, base.shifted(d)).is_empty())
                    throw domain_error("tower levels are not disjoint");
            std::vector<Event> levels;
            for (long i = 0; i < n; ++i) levels.push_back(Event(base.shifted(i)));
            return finish_tower(Event(base), n, std::move(levels), eps, false);
        }
    }
    throw budget_error("Bernoulli tower construction exhausted its budget");
}

// base^{-1} tower: same levels traversed backwards.
inline Tower reverse_tower(Tower t) {
    std::reverse(t.levels.begin(), t.levels.end());
    t.base = t.levels.front();
    return t;
}

// gamma^{-1} tau gamma pattern: (inner aperiodic, gamma an exact IET).
struct ConjugationParts {
    const Transformation* inner;
    IetMap gamma;
};

inline std::optional<ConjugationParts> conjugation_parts(const Transformation& T) {
    auto* outer = T.get_if<ComposeMap>();
    if (!outer) return std::nullopt;
    auto* inv = outer->f->get_if<InverseMap>();
    auto* rest = outer->g->get_if<ComposeMap>();
    if (!inv || !rest) return std::nullopt;
    auto g1 = reduce_to_iet(*inv->inner);
    auto g2 = reduce_to_iet(*rest->g);
    if (!g1 || !g2 || !(*g1 == *g2)) return std::nullopt;
    return ConjugationParts{rest->f.get(), *g1};
}

} // namespace detail

// Rokhlin tower for an aperiodic backend: height n, residual < eps, level
// disjointness exact. For the base-p odometer and n = p^k the residual is 0.
inline Tower rokhlin_tower(const System& S, long n, const Rat& eps,
                           const Config& cfg = Config::defaults()) {
    if (n < 1) throw domain_error("tower height must be >= 1");
    const Transformation& T = S.tau;
    if (auto* o = T.get_if<OdometerMap>()) return detail::odometer_tower(o->base, n, eps, cfg);
    if (auto* b = T.get_if<BernoulliShift>()) return detail::bernoulli_tower(b->carrier, n, eps, cfg);
    if (auto* p = T.get_if<ProductMap>()) {
        // lift a factor tower through the product
        auto pc = std::get<ProductCarrier>(T.carrier());
        auto lift = [&](bool left_side) {
            System F = System::make(left_side ? *p->left : *p->right);
            Tower ft = rokhlin_tower(F, n, eps, cfg);
            Tower t;
            t.height = n;
            t.residual = ft.residual;
            for (auto& l : ft.levels) {
                Event le = left_side ? Event::rect_union(pc, {{l, Event::full(*pc.right)}})
                                     : Event::rect_union(pc, {{Event::full(*pc.left), l}});
                t.levels.push_back(std::move(le));
            }
            t.base = t.levels.front();
            return t;
        };
        try {
            return lift(true);
        } catch (const domain_error&) {
            return lift(false);
        }
    }
    if (auto* i = T.get_if<InverseMap>())
        return detail::reverse_tower(rokhlin_tower(System::make(*i->inner), n, eps, cfg));
    if (auto parts = detail::conjugation_parts(T)) {
        Tower inner = rokhlin_tower(System::make(*parts->inner), n, eps, cfg);
        Tower t;
        t.height = n;
        t.residual = inner.residual;
        for (auto& l : inner.levels)
            t.levels.push_back(Event(parts->gamma.map(l.as_interval(), Dir::inverse)));
        t.base = t.levels.front();
        return t;
    }
    if (reduce_to_iet(T))
        throw domain_error("transformation has a periodic part (use periodic_decomposition)");
    throw domain_error("no tower construction for this backend");
}

// ---------------------------------------------------------------------------
// Aperiodicity witnesses: b with m(b n tau^n b) <= eps and |m(b)-1/2| <= eps,
// both verified exactly before returning.

inline Event aperiodicity_witness(const System& S, long n, const Rat& eps,
                                  const Config& cfg = Config::defaults()) {
    if (n < 1) throw domain_error("witness needs n >= 1");
    if (eps < 0) throw domain_error("witness needs eps >= 0");
    const Transformation& T = S.tau;
    auto verify = [&](const Event& b) {
        Event shifted_b = iterate_image(T, n, b, cfg);
        if (intersect(b, shifted_b).measure() > eps)
            throw domain_error("witness construction failed the intersection inequality");
        Rat half = b.measure() - rat(1, 2);
        if (boost::multiprecision::abs(half) > eps)
            throw domain_error("witness construction failed the measure inequality");
        return b;
    };
    if (auto* o = T.get_if<OdometerMap>()) {
        int p = o->base;
        if (p % 2 == 0) {
            // exact coset witness on the p^K-cell cycle: S + n = S^c in Z_{p^K}
            long s = 0;
            long nn = n;
            while (nn % 2 == 0) {
                ++s;
                nn /= 2;
            }
            int K = 1;
            Int pw = p;
            // need 2^{s+1} | p^K
            auto v2 = [](Int x) {
                long v = 0;
                while (x % 2 == 0) {
                    x /= 2;
                    ++v;
                }
                return v;
            };
            while (v2(pw) < s + 1) {
                pw *= p;
                ++K;
            }
            auto cells = detail::odometer_cell_orbit(p, K, cfg);
            Event b = Event(IntervalEvent::empty());
            long mod = 1L << (s + 1), half = 1L << s;
            for (long c = 0; c < static_cast<long>(cells.size()); ++c)
                if (c % mod < half) b = unite(b, cells[c]);
            return verify(b);
        }
        if (eps == 0)
            throw domain_error("exact witness impossible for an odd odometer base");
        // alternating block construction on the p^K cycle
        Int need = Int(2 * n) * ((rat_den(eps) + rat_num(eps) - 1) / rat_num(eps));
        int K = 0;
        Int pw = 1;
        while (pw < need) {
            pw *= p;
            ++K;
        }
        auto cells = detail::odometer_cell_orbit(p, K, cfg);
        long total = static_cast<long>(cells.size());
        long blocks2 = total / (2 * n);
        Event b = Event(IntervalEvent::empty());
        for (long c = 0; c < blocks2 * 2 * n; ++c)
            if ((c / n) % 2 == 0) b = unite(b, cells[c]);
        return verify(b);
    }
    if (T.get_if<BernoulliShift>()) {
        if (eps == 0)
            throw domain_error("exact witness impossible for a mixing shift");
        Tower t = rokhlin_tower(S, 2 * n, 2 * eps, cfg);
        Event b = Event::empty(T.carrier());
        for (long i = 0; i < n; ++i) b = unite(b, t.levels[i]);
        return verify(b);
    }
    if (auto* p = T.get_if<ProductMap>()) {
        auto pc = std::get<ProductCarrier>(T.carrier());
        try {
            Event wb = aperiodicity_witness(System::make(*p->left), n, eps, cfg);
            return verify(Event::rect_union(pc, {{wb, Event::full(*pc.right)}}));
        } catch (const domain_error&) {
            Event wb = aperiodicity_witness(System::make(*p->right), n, eps, cfg);
            return verify(Event::rect_union(pc, {{Event::full(*pc.left), wb}}));
        }
    }
    if (auto* i = T.get_if<InverseMap>())
        return verify(aperiodicity_witness(System::make(*i->inner), n, eps, cfg));
    if (auto parts = detail::conjugation_parts(T)) {
        Event wb = aperiodicity_witness(System::make(*parts->inner), n, eps, cfg);
        return verify(Event(parts->gamma.map(wb.as_interval(), Dir::inverse)));
    }
    if (reduce_to_iet(T))
        throw domain_error("transformation has a periodic part (use periodic_decomposition)");
    throw domain_error("no witness construction for this backend");
}

// ---------------------------------------------------------------------------
// Cycle approximation and conjugation

// period-N cycle eta with base whose N iterates partition [0,1) exactly and
// eta^N = id; bound is a certified upper enclosure of rho(tau, eta), <= 2/N.
struct CycleCertificate {
    IetMap cycle;
    long period = 1;
    Event base;
    Rat bound;
};

namespace detail {

// partial piece maps: disjoint sources, not necessarily tiling
using PiecePartial = std::vector<IetPiece>;

inline PiecePartial restrict_map(const IetMap& m, const IntervalEvent& dom) {
    PiecePartial out;
    for (const auto& p : m.pieces())
        for (const auto& [lo, hi] : dom.pieces()) {
            Rat l = std::max(p.lo, lo), h = std::min(p.hi, hi);
            if (l < h) out.push_back({l, h, p.offset});
        }
    return out;
}

inline PiecePartial compose_partial(const PiecePartial& f, const PiecePartial& g) {
    PiecePartial out;
    for (const auto& pg : g) {
        Rat ilo = pg.lo + pg.offset, ihi = pg.hi + pg.offset;
        for (const auto& pf : f) {
            Rat lo = std::max(ilo, pf.lo), hi = std::min(ihi, pf.hi);
            if (lo < hi) out.push_back({lo - pg.offset, hi - pg.offset, pg.offset + pf.offset});
        }
    }
    return out;
}

// the unique order-preserving (leftmost matching) piece map src -> dst
inline PiecePartial zip_pieces(const IntervalEvent& src, const IntervalEvent& dst) {
    if (src.measure() != dst.measure()) throw domain_error("zip needs equal measures");
    PiecePartial out;
    auto s = src.pieces();
    auto d = dst.pieces();
    std::size_t i = 0, j = 0;
    if (s.empty()) return out;
    Rat spos = s[0].first, dpos = d[0].first;
    while (i < s.size() && j < d.size()) {
        Rat len = std::min(Rat(s[i].second - spos), Rat(d[j].second - dpos));
        if (len > 0) out.push_back({spos, spos + len, dpos - spos});
        spos += len;
        dpos += len;
        if (spos == s[i].second && ++i < s.size()) spos = s[i].first;
        if (dpos == d[j].second && ++j < d.size()) dpos = d[j].first;
    }
    return out;
}

// equal-measure slices of an interval union, left to right
inline std::vector<IntervalEvent> equal_slices(const IntervalEvent& e, long k) {
    std::vector<IntervalEvent> out;
    Rat total = e.measure();
    Rat step = total / k;
    Rat taken = 0;
    auto pieces = e.pieces();
    std::size_t idx = 0;
    Rat pos = pieces.empty() ? Rat(0) : pieces[0].first;
    for (long i = 0; i < k; ++i) {
        std::vector<std::pair<Rat, Rat>> raw;
        Rat want = step;
        while (want > 0 && idx < pieces.size()) {
            Rat avail = pieces[idx].second - pos;
            Rat take = std::min(want, avail);
            raw.emplace_back(pos, pos + take);
            pos += take;
            want -= take;
            if (pos == pieces[idx].second && ++idx < pieces.size()) pos = pieces[idx].first;
        }
        out.push_back(IntervalEvent::from_raw(std::move(raw)));
        taken += step;
    }
    return out;
}

// extend gamma0 : A -> C along the two cycles: on eta1^i(A) the map is
// eta2^i gamma0 eta1^{-i}.
inline IetMap extend_along_levels(const PiecePartial& gamma0, const IetMap& eta1,
                                  const IetMap& eta2, long period) {
    PiecePartial all;
    IetMap e1inv = eta1.inverted();
    PiecePartial cur = gamma0; // eta2^i o gamma0 o eta1^{-i}
    for (long i = 0; i < period; ++i) {
        for (const auto& p : cur) all.push_back(p);
        if (i + 1 < period) cur = compose_partial(eta2.pieces(), compose_partial(cur, e1inv.pieces()));
    }
    return IetMap::from_pieces(std::move(all));
}

} // namespace detail

inline CycleCertificate cycle_approximation(const System& S, long N,
                                            const Config& cfg = Config::defaults()) {
    if (N < 2) throw domain_error("cycle approximation needs N >= 2");
    const Transformation& T = S.tau;
    if (!std::holds_alternative<IntervalCarrier>(T.carrier()))
        throw carrier_mismatch("cycle approximation requires the interval carrier");
    if (auto* o = T.get_if<OdometerMap>()) {
        // power of the base: the truncated odometer is the cycle
        Int pw = 1;
        int k = 0;
        while (pw < N) {
            pw *= o->base;
            ++k;
        }
        if (pw == N) {
            CycleCertificate c;
            c.cycle = truncated_odometer(o->base, k);
            c.period = N;
            c.base = interval_event(Rat(0), Rat(1, Int(N)));
            Enclosure e = rho_maps(T, Transformation::iet(c.cycle), Rat(1, Int(2) * N * N), cfg);
            c.bound = e.hi;
            if (c.bound > Rat(2, Int(N))) throw domain_error("cycle bound exceeded 2/N");
            return c;
        }
        // general N: close up a height-N tower; tau is kept on all levels
        // but the last, the wrap returns by tau^{1-N}, and the residual is
        // cycled through order-preserving slices.
        Tower t = detail::odometer_tower(o->base, N, Rat(1, Int(N)), cfg);
        Event resid = Event(IntervalEvent::full());
        for (const auto& l : t.levels) resid = subtract(resid, l);
        auto slices = detail::equal_slices(resid.as_interval(), N);
        // depth used by the regrouped tower
        detail::PiecePartial pieces;
        int depth = 1;
        {
            Int pw2 = o->base;
            Int need = Int(N) * N;
            while (pw2 < need) {
                pw2 *= o->base;
                ++depth;
            }
        }
        IetMap tau_trunc = truncated_odometer(o->base, depth);
        for (long i = 0; i + 1 < N; ++i) {
            auto part = detail::restrict_map(tau_trunc, t.levels[i].as_interval());
            for (const auto& p : part) pieces.push_back(p);
        }
        {
            // wrap: tau^{1-N} on the last level (the tail cell never sits in
            // levels 0..N-2, so the truncated map agrees with tau there)
            IetMap back = tau_trunc.power(-(N - 1));
            auto part = detail::restrict_map(back, t.levels[N - 1].as_interval());
            for (const auto& p : part) pieces.push_back(p);
        }
        for (long i = 0; i < N; ++i) {
            auto z = detail::zip_pieces(slices[i], slices[(i + 1) % N]);
            for (const auto& p : z) pieces.push_back(p);
        }
        CycleCertificate c;
        c.cycle = IetMap::from_pieces(std::move(pieces));
        c.period = N;
        c.base = unite(t.levels[0], Event(slices[0]));
        // eta^N = id, checked on the cell permutation
        auto cp = cell_permutation(c.cycle);
        if (!cp) throw budget_error("cycle permutation too fine to verify");
        for (std::size_t i = 0; i < cp->perm.size(); ++i) {
            long cur = static_cast<long>(i);
            for (long s = 0; s < N; ++s) cur = cp->perm[cur];
            if (cur != static_cast<long>(i)) throw domain_error("cycle closure failed");
        }
        Enclosure e = rho_maps(T, Transformation::iet(c.cycle), Rat(1, Int(2) * N * N), cfg);
        c.bound = e.hi;
        if (c.bound > Rat(2, Int(N))) throw domain_error("cycle bound exceeded 2/N");
        return c;
    }
    if (auto* i = T.get_if<InverseMap>()) {
        CycleCertificate inner = cycle_approximation(System::make(*i->inner), N, cfg);
        CycleCertificate c;
        c.cycle = inner.cycle.inverted();
        c.period = N;
        c.base = inner.base;
        c.bound = inner.bound; // rho is inverse invariant
        return c;
    }
    if (auto parts = detail::conjugation_parts(T)) {
        CycleCertificate inner = cycle_approximation(System::make(*parts->inner), N, cfg);
        CycleCertificate c;
        c.cycle = compose(parts->gamma.inverted(), compose(inner.cycle, parts->gamma));
        c.period = N;
        c.base = Event(parts->gamma.map(inner.base.as_interval(), Dir::inverse));
        c.bound = inner.bound; // rho is conjugation invariant
        return c;
    }
    if (reduce_to_iet(T))
        throw domain_error("transformation has a periodic part (use periodic_decomposition)");
    throw domain_error("no cycle approximation for this backend");
}

// Any two cycles of equal period are conjugate: gamma eta1 = eta2 gamma with
// gamma(base1) = base2, exact.
inline IetMap conjugate_cycles(const CycleCertificate& c1, const CycleCertificate& c2) {
    if (c1.period != c2.period) throw domain_error("conjugate_cycles needs equal periods");
    auto gamma0 = detail::zip_pieces(c1.base.as_interval(), c2.base.as_interval());
    IetMap gamma = detail::extend_along_levels(gamma0, c1.cycle, c2.cycle, c1.period);
    if (!(compose(gamma, c1.cycle) == compose(c2.cycle, gamma)))
        throw domain_error("conjugation equation failed");
    if (!(gamma.map(c1.base.as_interval()) == c2.base.as_interval()))
        throw domain_error("conjugation does not map base to base");
    return gamma;
}

// ---------------------------------------------------------------------------
// Approximate conjugation of aperiodic systems (the telescoped bound)

struct ConjugationResult {
    Transformation tau2_conjugated; // gamma^{-1} tau2 gamma, symbolic
    Rat certificate;                // >= rho(tau1, tau2') by the triangle route
    long cycle_period = 0;
};

inline ConjugationResult approximate_conjugation(const System& S1, const System& S2,
                                                 const Rat& eps,
                                                 const Config& cfg = Config::defaults()) {
    if (eps <= 0) throw domain_error("approximate_conjugation needs eps > 0");
    if (!std::holds_alternative<IntervalCarrier>(S1.tau.carrier()) ||
        !std::holds_alternative<IntervalCarrier>(S2.tau.carrier()))
        throw carrier_mismatch("approximate_conjugation works on the interval carrier");
    if (S1.tau == S2.tau) {
        // identity conjugation, certificate 0
        return {Transformation::conjugate(S2.tau, Transformation::iet(IetMap::identity())), Rat(0),
                0};
    }
    // N with 4/N < eps
    long N = 2;
    while (Rat(4, Int(N)) >= eps) ++N;
    CycleCertificate c1 = cycle_approximation(S1, N, cfg);
    CycleCertificate c2 = cycle_approximation(S2, N, cfg);
    IetMap gamma = conjugate_cycles(c1, c2);
    // gamma eta1 = eta2 gamma, so eta1 = gamma^{-1} eta2 gamma and
    // rho(tau1, tau2') <= rho(tau1,eta1) + rho(eta2,tau2).
    Transformation conj = Transformation::conjugate(S2.tau, Transformation::iet(gamma));
    Rat cert = c1.bound + c2.bound;
    if (cert > eps) throw budget_error("certificate exceeded eps; deepen the cycle budget");
    return {std::move(conj), cert, N};
}

// ---------------------------------------------------------------------------
// Periodic constructions

namespace detail {

inline void require_free_periodic(const IetMap& m, long n) {
    for (long j = 1; j <= n; ++j)
        if (!m.power(j).zero_offset_set().is_empty())
            throw domain_error("transformation has fixed points below the stated period");
    if (!m.power(n + 1).is_identity()) throw domain_error("transformation period mismatch");
}

} // namespace detail

// For tau with tau^{n+1} = id and null fixed sets below: a set A whose
// n+1 iterates partition [0,1) exactly (one cell per orbit of the cell
// permutation).
inline Event partition_for_periodic(const Transformation& T, long n,
                                    const Config& cfg = Config::defaults()) {
    (void)cfg;
    auto m = reduce_to_iet(T);
    if (!m) throw domain_error("partition_for_periodic needs an IET-reducible map");
    detail::require_free_periodic(*m, n);
    auto cp = cell_permutation(*m);
    if (!cp) throw budget_error("cell structure too fine");
    long cells = static_cast<long>(cp->perm.size());
    std::vector<char> seen(cells, 0);
    std::vector<std::pair<Rat, Rat>> raw;
    for (long i = 0; i < cells; ++i) {
        if (seen[i]) continue;
        long cur = i, len = 0;
        do {
            seen[cur] = 1;
            cur = cp->perm[cur];
            ++len;
        } while (cur != i);
        if (len != n + 1) throw domain_error("orbit length does not match the period");
        raw.emplace_back(Rat(Int(i), cp->q), Rat(Int(i) + 1, cp->q));
    }
    return interval_event(std::move(raw));
}

// The independent refinement: A as above, additionally exactly independent
// from the algebra generated by the tau-orbit of the supplied events.
inline Event independent_periodic_partition(const Transformation& T, long n,
                                            const std::vector<Event>& Bs,
                                            const Config& cfg = Config::defaults()) {
    auto m = reduce_to_iet(T);
    if (!m) throw domain_error("independent_periodic_partition needs an IET-reducible map");
    detail::require_free_periodic(*m, n);
    long period = n + 1;
    if (Bs.empty()) return partition_for_periodic(T, n, cfg);
    // orbit algebra: atoms of the algebra generated by all iterates
    std::vector<Event> gens;
    for (const auto& b : Bs)
        for (long i = 0; i < period; ++i) gens.push_back(iterate_image(T, i, b, cfg));
    FiniteAlgebra orbit = generated_algebra(gens, IntervalCarrier{});
    // tau permutes the atoms
    std::vector<long> sigma(orbit.size(), -1);
    for (std::size_t i = 0; i < orbit.size(); ++i) {
        Event img = map_event(T, orbit.atoms()[i], Dir::forward, cfg);
        for (std::size_t j = 0; j < orbit.size(); ++j)
            if (img == orbit.atoms()[j]) {
                sigma[i] = static_cast<long>(j);
                break;
            }
        if (sigma[i] < 0) throw domain_error("orbit algebra is not tau-invariant");
    }
    std::vector<char> seen(orbit.size(), 0);
    Event A = Event(IntervalEvent::empty());
    for (std::size_t i = 0; i < orbit.size(); ++i) {
        if (seen[i]) continue;
        long k = 0;
        for (long cur = static_cast<long>(i);;) {
            seen[cur] = 1;
            ++k;
            cur = sigma[cur];
            if (cur == static_cast<long>(i)) break;
        }
        long s = period / k;
        if (s * k != period) throw domain_error("atom orbit does not divide the period");
        // induced map T^k within the atom; one cell per induced orbit
        const Event& atom = orbit.atoms()[i];
        IetMap mk = m->power(k);
        auto cpk = cell_permutation(mk);
        if (!cpk) throw budget_error("cell structure too fine");
        Int q = cpk->q;
        for (const auto& [lo, hi] : atom.as_interval().pieces()) {
            q = boost::multiprecision::lcm(q, rat_den(lo));
            q = boost::multiprecision::lcm(q, rat_den(hi));
        }
        long cells = q.convert_to<long>();
        long scale = (q / cpk->q).convert_to<long>();
        auto inside = [&](long c) {
            return atom.as_interval().contains(Rat(Int(c), q));
        };
        auto step = [&](long c) {
            // refine cpk to the q grid
            long coarse = c / scale, off = c % scale;
            return cpk->perm[coarse] * scale + off;
        };
        std::vector<char> used(cells, 0);
        IntervalEvent a1;
        for (long c = 0; c < cells; ++c) {
            if (!inside(c) || used[c]) continue;
            long cur = c, len = 0;
            std::vector<long> orb;
            do {
                used[cur] = 1;
                orb.push_back(cur);
                cur = step(cur);
                ++len;
            } while (cur != c);
            if (len != s) throw domain_error("induced orbit length mismatch");
            a1 = unite(a1, IntervalEvent::interval(Rat(Int(c), q), Rat(Int(c) + 1, q)));
        }
        // slice A1 into k equal parts and spread them along the atom orbit
        auto slices = detail::equal_slices(a1, k);
        for (long c = 0; c < k; ++c)
            A = unite(A, iterate_image(T, c, Event(slices[c]), cfg));
    }
    // exact verification of both postconditions
    Event seen_u = Event(IntervalEvent::empty());
    for (long i = 0; i < period; ++i) {
        Event level = iterate_image(T, i, A, cfg);
        if (!intersect(seen_u, level).is_empty())
            throw domain_error("periodic partition iterates overlap");
        seen_u = unite(seen_u, level);
    }
    if (!(seen_u == Event(IntervalEvent::full())))
        throw domain_error("periodic partition does not cover the space");
    for (const auto& atom : orbit.atoms())
        if (intersect(A, atom).measure() != A.measure() * atom.measure())
            throw domain_error("independence failed on an orbit atom");
    return A;
}

// Parameterized conjugation for cycles: gamma eta1 = eta2 gamma and
// gamma(b_i) = d_i, given exactly matching quantifier-free types of the
// orbit tuples. A mismatch is rejected with the first failing combination.
inline IetMap conjugacy_with_parameters(const CycleCertificate& c1, const CycleCertificate& c2,
                                        const std::vector<Event>& bs, const std::vector<Event>& ds,
                                        const Config& cfg = Config::defaults()) {
    if (c1.period != c2.period) throw domain_error("conjugacy_with_parameters: period mismatch");
    if (bs.size() != ds.size()) throw domain_error("conjugacy_with_parameters: tuple lengths differ");
    long P = c1.period;
    std::size_t mlen = bs.size();
    if (static_cast<std::size_t>(P) * mlen > 16)
        throw domain_error("orbit tuple too long for sign-pattern enumeration");
    Transformation t1 = Transformation::iet(c1.cycle), t2 = Transformation::iet(c2.cycle);
    std::vector<Event> orbit_b, orbit_d;
    for (long i = 0; i < P; ++i)
        for (std::size_t j = 0; j < mlen; ++j) {
            orbit_b.push_back(iterate_image(t1, i, bs[j], cfg));
            orbit_d.push_back(iterate_image(t2, i, ds[j], cfg));
        }
    // qf-type equality: all sign-pattern measures agree exactly
    unsigned total = 1u << orbit_b.size();
    for (unsigned mask = 0; mask < total; ++mask) {
        Rat mb = sign_pattern_event(orbit_b, mask).measure();
        Rat md = sign_pattern_event(orbit_d, mask).measure();
        if (mb != md) {
            std::string pat;
            for (std::size_t k = 0; k < orbit_b.size(); ++k)
                pat += ((mask >> k) & 1u) ? '+' : '-';
            throw domain_error("qf-type mismatch at combination " + pat + ": " + rat_str(mb) +
                               " vs " + rat_str(md));
        }
    }
    Event A = independent_periodic_partition(t1, P - 1, bs, cfg);
    Event C = independent_periodic_partition(t2, P - 1, ds, cfg);
    // match atoms of the two orbit algebras by sign pattern
    detail::PiecePartial gamma0;
    for (unsigned mask = 0; mask < total; ++mask) {
        Event batom = sign_pattern_event(orbit_b, mask);
        if (batom.is_empty()) continue;
        Event datom = sign_pattern_event(orbit_d, mask);
        auto z = detail::zip_pieces(intersect(A, batom).as_interval(),
                                    intersect(C, datom).as_interval());
        for (const auto& p : z) gamma0.push_back(p);
    }
    IetMap gamma = detail::extend_along_levels(gamma0, c1.cycle, c2.cycle, P);
    if (!(compose(gamma, c1.cycle) == compose(c2.cycle, gamma)))
        throw domain_error("parameterized conjugation equation failed");
    for (std::size_t j = 0; j < mlen; ++j)
        if (!(Event(gamma.map(bs[j].as_interval())) == ds[j]))
            throw domain_error("parameterized conjugation does not map parameters");
    return gamma;
}

// ---------------------------------------------------------------------------
// Periodic decomposition (the Z_i parts)

struct Decomposition {
    std::map<long, Event> periodic_parts; // i -> points of exact period i
    Event aperiodic_part;
};

inline Decomposition periodic_decomposition(const Transformation& T,
                                            const Config& cfg = Config::defaults()) {
    Decomposition out;
    if (auto m = reduce_to_iet(T)) {
        auto cp = cell_permutation(*m);
        if (!cp) throw budget_error("cell structure too fine for decomposition");
        long cells = static_cast<long>(cp->perm.size());
        std::vector<char> seen(cells, 0);
        std::map<long, std::vector<std::pair<Rat, Rat>>> raw;
        for (long i = 0; i < cells; ++i) {
            if (seen[i]) continue;
            std::vector<long> orb;
            long cur = i;
            do {
                seen[cur] = 1;
                orb.push_back(cur);
                cur = cp->perm[cur];
            } while (cur != i);
            for (long c : orb)
                raw[static_cast<long>(orb.size())].emplace_back(Rat(Int(c), cp->q),
                                                                Rat(Int(c) + 1, cp->q));
        }
        for (auto& [period, pieces] : raw)
            out.periodic_parts.emplace(period, interval_event(std::move(pieces)));
        out.aperiodic_part = Event(IntervalEvent::empty());
        return out;
    }
    // aperiodic backends: certified empty fixed sets
    Carrier c = T.carrier();
    long horizon = 8;
    for (long i = 1; i <= horizon; ++i)
        if (!fixed_set(T, i, cfg).is_empty())
            throw domain_error("unexpected periodic part in an aperiodic backend");
    out.aperiodic_part = Event::full(c);
    return out;
}

// ---------------------------------------------------------------------------
// Product systems

inline int carrier_depth(const Carrier& c) {
    if (!std::holds_alternative<ProductCarrier>(c)) return 1;
    const auto& pc = std::get<ProductCarrier>(c);
    return 1 + std::max(carrier_depth(*pc.left), carrier_depth(*pc.right));
}

inline System product_system(const System& S1, const System& S2,
                             const Config& cfg = Config::defaults()) {
    (void)cfg;
    Transformation prod = Transformation::product(S1.tau, S2.tau);
    Carrier c = prod.carrier();
    if (carrier_depth(c) > 2) throw budget_error("product nesting is capped at 2 levels");
    return System{c, std::move(prod)};
}

} // namespace ergo

#endif
