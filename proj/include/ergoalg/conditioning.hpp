#ifndef ERGOALG_CONDITIONING_HPP
#define ERGOALG_CONDITIONING_HPP

#include <algorithm>
#include <map>
#include <utility>
#include <vector>

#include "algebra.hpp"
#include "transformation.hpp"

namespace ergo {

// A conditional probability P(a|C) for finite C: one rational value per atom,
// aligned with the algebra's canonical atom order.
class StepFunction {
public:
    StepFunction(FiniteAlgebra algebra, std::vector<Rat> values)
        : algebra_(std::move(algebra)), values_(std::move(values)) {
        if (values_.size() != algebra_.size())
            throw domain_error("step function needs one value per atom");
        for (const auto& v : values_)
            if (v < 0 || v > 1) throw domain_error("step function value outside [0,1]");
    }

    const FiniteAlgebra& algebra() const { return algebra_; }
    const std::vector<Rat>& values() const { return values_; }

    friend bool operator==(const StepFunction&, const StepFunction&) = default;

    // integral over a union of atoms
    Rat integral(const Event& over) const {
        Rat total = 0;
        for (std::size_t i = 0; i < values_.size(); ++i)
            total += values_[i] * intersect(algebra_.atoms()[i], over).measure();
        return total;
    }

    Rat l1_distance(const StepFunction& o) const {
        if (!(algebra_ == o.algebra_)) throw domain_error("step functions on different algebras");
        Rat d = 0;
        for (std::size_t i = 0; i < values_.size(); ++i)
            d += boost::multiprecision::abs(values_[i] - o.values_[i]) *
                 algebra_.atoms()[i].measure();
        return d;
    }

private:
    FiniteAlgebra algebra_;
    std::vector<Rat> values_;
};

inline StepFunction conditional_probability(const Event& a, const FiniteAlgebra& C) {
    if (!(a.carrier() == C.carrier())) throw carrier_mismatch("conditioning carrier mismatch");
    std::vector<Rat> values;
    values.reserve(C.size());
    for (const auto& c : C.atoms()) values.push_back(intersect(a, c).measure() / c.measure());
    return StepFunction(C, std::move(values));
}

// The event of one sign pattern: intersection of a_j or its complement as
// bit j of `mask` is 1 or 0.
inline Event sign_pattern_event(const std::vector<Event>& tuple, unsigned mask) {
    Event e = Event::full(tuple.front().carrier());
    for (std::size_t j = 0; j < tuple.size(); ++j)
        e = intersect(e, (mask >> j) & 1u ? tuple[j] : complement(tuple[j]));
    return e;
}

// The full type datum of a tuple over C: the 2^n conditional probabilities
// of the sign-pattern intersections. Values on each atom sum to 1 by
// construction.
struct TypeDatum {
    std::vector<StepFunction> patterns; // indexed by sign mask

    static TypeDatum of(const std::vector<Event>& tuple, const FiniteAlgebra& C) {
        if (tuple.empty()) throw domain_error("type datum of empty tuple");
        if (tuple.size() > 16) throw domain_error("tuple too long for sign-pattern enumeration");
        TypeDatum t;
        for (unsigned mask = 0; mask < (1u << tuple.size()); ++mask)
            t.patterns.push_back(conditional_probability(sign_pattern_event(tuple, mask), C));
        return t;
    }
};

inline bool types_equal(const std::vector<Event>& a, const std::vector<Event>& b,
                        const FiniteAlgebra& C) {
    if (a.size() != b.size()) throw domain_error("types_equal needs tuples of equal length");
    TypeDatum ta = TypeDatum::of(a, C), tb = TypeDatum::of(b, C);
    return ta.patterns == tb.patterns;
}

inline void require_partition(const std::vector<Event>& tuple, const char* who) {
    if (tuple.empty()) throw domain_error(std::string(who) + ": empty tuple");
    Carrier c = tuple.front().carrier();
    Event seen = Event::empty(c);
    for (const auto& e : tuple) {
        if (!intersect(seen, e).is_empty())
            throw domain_error(std::string(who) + ": tuple is not a partition");
        seen = unite(seen, e);
    }
    if (!(seen == Event::full(c)))
        throw domain_error(std::string(who) + ": tuple does not cover the space");
}

// d(tp(a/C), tp(b/C)) for partition tuples: max_i of the L1 norm of the
// difference of conditional probabilities.
inline Rat type_distance(const std::vector<Event>& a, const std::vector<Event>& b,
                         const FiniteAlgebra& C) {
    if (a.size() != b.size()) throw domain_error("type_distance needs tuples of equal length");
    require_partition(a, "type_distance");
    require_partition(b, "type_distance");
    Rat d = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        Rat l1 = conditional_probability(a[i], C).l1_distance(conditional_probability(b[i], C));
        d = std::max(d, l1);
    }
    return d;
}

// The realizing construction for the distance formula over the trivial
// algebra: a' is the consecutive-interval rearrangement of a; b' matches
// b's type and achieves max_i rho(a_i', b_i') = type_distance(a,b,trivial).
struct RealizedDistance {
    std::vector<Event> a_prime, b_prime;
    Rat achieved;
};

inline RealizedDistance realize_distance(const std::vector<Event>& a,
                                         const std::vector<Event>& b) {
    if (a.size() != b.size()) throw domain_error("realize_distance needs tuples of equal length");
    require_partition(a, "realize_distance");
    require_partition(b, "realize_distance");
    if (!std::holds_alternative<IntervalCarrier>(a.front().carrier()))
        throw carrier_mismatch("realize_distance works on the interval carrier");
    std::size_t n = a.size();
    std::vector<Rat> ma(n), mb(n);
    for (std::size_t i = 0; i < n; ++i) {
        ma[i] = a[i].measure();
        mb[i] = b[i].measure();
    }
    RealizedDistance out;
    std::vector<std::pair<Rat, Rat>> free_pool; // surplus chunks, left to right
    Rat pos = 0;
    std::vector<std::vector<std::pair<Rat, Rat>>> braw(n);
    for (std::size_t i = 0; i < n; ++i) {
        Rat lo = pos, hi = pos + ma[i];
        out.a_prime.push_back(interval_event(lo, hi));
        if (mb[i] <= ma[i]) {
            if (mb[i] > 0) braw[i].push_back({lo, lo + mb[i]});
            if (mb[i] < ma[i]) free_pool.push_back({lo + mb[i], hi});
        } else {
            if (ma[i] > 0) braw[i].push_back({lo, hi});
        }
        pos = hi;
    }
    for (std::size_t i = 0; i < n; ++i) {
        Rat deficit = mb[i] - ma[i];
        while (deficit > 0) {
            auto& [flo, fhi] = free_pool.front();
            Rat take = std::min(deficit, Rat(fhi - flo));
            braw[i].push_back({flo, flo + take});
            flo += take;
            deficit -= take;
            if (flo == fhi) free_pool.erase(free_pool.begin());
        }
        out.b_prime.push_back(interval_event(std::move(braw[i])));
    }
    out.achieved = 0;
    for (std::size_t i = 0; i < n; ++i)
        out.achieved = std::max(out.achieved, rho(out.a_prime[i], out.b_prime[i]));
    return out;
}

// Non-dividing: tp(a / C u B) does not divide over C iff every sign
// pattern's conditional probability over the join equals the one over C
// (as functions, i.e. after refining to the join's atoms).
inline bool is_independent(const std::vector<Event>& tuple, const FiniteAlgebra& C,
                           const FiniteAlgebra& B) {
    FiniteAlgebra J = join(C, B);
    for (unsigned mask = 0; mask < (1u << tuple.size()); ++mask) {
        Event e = sign_pattern_event(tuple, mask);
        for (const auto& j : J.atoms()) {
            // the C-atom containing j
            const Event* home = nullptr;
            for (const auto& c : C.atoms())
                if (subset(j, c)) { home = &c; break; }
            if (!home) throw domain_error("join atom not contained in a conditioning atom");
            // m(e|j) == m(e|home), cross multiplied
            if (intersect(e, j).measure() * home->measure() !=
                intersect(e, *home).measure() * j.measure())
                return false;
        }
    }
    return true;
}

inline bool is_independent(const Event& a, const FiniteAlgebra& C, const FiniteAlgebra& B) {
    return is_independent(std::vector<Event>{a}, C, B);
}

// Remark-style built-in canonical base: the subalgebra of C generated by the
// level sets of all 2^n conditional probabilities.
inline FiniteAlgebra canonical_base(const std::vector<Event>& tuple, const FiniteAlgebra& C) {
    TypeDatum t = TypeDatum::of(tuple, C);
    std::map<std::vector<Rat>, Event> groups;
    for (std::size_t i = 0; i < C.size(); ++i) {
        std::vector<Rat> level;
        level.reserve(t.patterns.size());
        for (const auto& p : t.patterns) level.push_back(p.values()[i]);
        auto it = groups.find(level);
        if (it == groups.end()) groups.emplace(std::move(level), C.atoms()[i]);
        else it->second = unite(it->second, C.atoms()[i]);
    }
    std::vector<Event> atoms;
    atoms.reserve(groups.size());
    for (auto& [level, e] : groups) atoms.push_back(std::move(e));
    return FiniteAlgebra::from_atoms(std::move(atoms));
}

// dcl(C) = events of the generated algebra: membership is being exactly a
// union of atoms.
inline bool dcl_membership(const Event& a, const FiniteAlgebra& C) {
    if (!(a.carrier() == C.carrier())) throw carrier_mismatch("dcl carrier mismatch");
    return C.spans(a);
}

// ---------------------------------------------------------------------------
// m-step simple approximants

struct MStepResult {
    Event approx;
    Rat bound; // certified rho(a, approx)
    bool already_simple = false;
};

namespace detail {

inline bool on_grid(const Rat& v, const Rat& grid) {
    Rat q = v / grid;
    return rat_den(q) == 1;
}

inline bool generated_on_grid(const Event& a, const Transformation& tau, const FiniteAlgebra& C,
                              long m, const Rat& grid, const Config& cfg) {
    std::vector<Event> gens;
    for (long i = 0; i <= m; ++i) gens.push_back(iterate_image(tau, i, a, cfg));
    FiniteAlgebra G = generated_algebra(gens, a.carrier());
    for (const auto& g : G.atoms())
        for (const auto& v : conditional_probability(g, C).values())
            if (!on_grid(v, grid)) return false;
    return true;
}

// Trims/grows a inside atom c to measure target, left to right.
inline IntervalEvent resize_within(const IntervalEvent& part, const IntervalEvent& atom,
                                   const Rat& target) {
    Rat cur = part.measure();
    if (target == cur) return part;
    std::vector<std::pair<Rat, Rat>> raw;
    if (target < cur) {
        // keep the leftmost `target` of part
        Rat left = target;
        for (const auto& [lo, hi] : part.pieces()) {
            if (left == 0) break;
            Rat take = std::min(left, Rat(hi - lo));
            raw.emplace_back(lo, lo + take);
            left -= take;
        }
    } else {
        for (const auto& p : part.pieces()) raw.emplace_back(p);
        Rat need = target - cur;
        IntervalEvent room = subtract(atom, part);
        for (const auto& [lo, hi] : room.pieces()) {
            if (need == 0) break;
            Rat take = std::min(need, Rat(hi - lo));
            raw.emplace_back(lo, lo + take);
            need -= take;
        }
        if (need > 0) throw domain_error("m-step target exceeds atom measure");
    }
    return IntervalEvent::from_raw(std::move(raw));
}

} // namespace detail

// Rounds `a` so that every conditional probability P(.|C) over the algebra
// generated by {tau^i(a') : 0 <= i <= m} is a multiple of `grid` (m-step
// simple over C). The certified bound rho(a,a') is returned with the event.
// For m >= 1 the construction works on a tau-permuted cell partition; the
// grid must be realizable there (p^K | q for the odometer, cell grid
// refining q for rational IETs) or the call fails loudly.
inline MStepResult approximate_m_step(const Event& a, const Transformation& tau,
                                      const FiniteAlgebra& C, long m, const Rat& grid,
                                      const Config& cfg = Config::defaults()) {
    if (rat_num(grid) != 1 || grid <= 0 || grid > 1)
        throw domain_error("grid must have the form 1/q");
    if (!(a.carrier() == C.carrier()) || !(a.carrier() == tau.carrier()))
        throw carrier_mismatch("approximate_m_step carrier mismatch");
    if (!std::holds_alternative<IntervalCarrier>(a.carrier()))
        throw domain_error("approximate_m_step supports the interval carrier");
    // tau-compatibility of C: each atom maps inside the algebra's span.
    for (const auto& c : C.atoms())
        if (!C.spans(map_event(tau, c, Dir::forward, cfg)))
            throw domain_error("C is not tau-compatible");
    if (detail::generated_on_grid(a, tau, C, m, grid, cfg)) return {a, Rat(0), true};

    Int q = rat_den(grid);
    const IntervalEvent& ia = a.as_interval();
    if (m == 0) {
        // Round the conditional measure inside each atom, left to right.
        std::vector<std::pair<Rat, Rat>> raw;
        Rat bound = 0;
        for (const auto& c : C.atoms()) {
            const IntervalEvent& ic = c.as_interval();
            IntervalEvent part = intersect(ia, ic);
            Rat target = ic.measure() * round_to_grid(part.measure() / ic.measure(), grid);
            bound += boost::multiprecision::abs(target - part.measure());
            IntervalEvent resized = detail::resize_within(part, ic, target);
            for (const auto& p : resized.pieces()) raw.emplace_back(p);
        }
        Event approx = interval_event(std::move(raw));
        return {approx, bound, false};
    }
    // Cell path: a tau-permuted equal-cell grid, fine enough that counts of
    // cells give on-grid conditional probabilities inside every atom.
    Int cells; // number of cells
    if (auto* o = tau.get_if<OdometerMap>()) {
        // largest K with p^K | q and C aligned to p^{-K} cells
        Int pk = 1;
        int K = 0;
        while (q % (pk * o->base) == 0) {
            pk *= o->base;
            ++K;
        }
        cells = pk;
    } else if (auto red = reduce_to_iet(tau)) {
        auto cp = cell_permutation(*red);
        if (!cp) throw domain_error("m-step cell structure too fine");
        if (q % cp->q != 0) throw domain_error("grid incompatible with transformation cells");
        cells = q; // q cells refine the tau cells since cp->q | q
    } else {
        throw domain_error("m-step for m >= 1 needs an odometer or rational IET backend");
    }
    Rat z(Int(1), cells);
    // every C atom must be a union of cells and satisfy q*z/m(c) integral
    for (const auto& c : C.atoms()) {
        for (const auto& [lo, hi] : c.as_interval().pieces())
            if (rat_den(lo / z) != 1 || rat_den(hi / z) != 1)
                throw domain_error("C atoms are not aligned with the m-step cell grid");
        Rat ratio = (Rat(q) * z) / c.measure();
        if (rat_den(ratio) != 1) throw domain_error("grid not realizable inside an atom of C");
    }
    long ncells = cells.convert_to<long>();
    std::vector<std::pair<Rat, Rat>> raw;
    Rat bound = 0;
    for (const auto& c : C.atoms()) {
        const IntervalEvent& ic = c.as_interval();
        IntervalEvent part = intersect(ia, ic);
        // candidate cells inside this atom, by overlap with a (desc), then
        // spatial order
        std::vector<std::pair<Rat, long>> score;
        for (long i = 0; i < ncells; ++i) {
            Rat lo = z * i, hi = z * (i + 1);
            if (!subset(IntervalEvent::interval(lo, hi), ic)) continue;
            score.emplace_back(intersect(part, IntervalEvent::interval(lo, hi)).measure(), i);
        }
        Int want_n = rat_num(part.measure() / z) / rat_den(part.measure() / z);
        Rat frac = part.measure() / z - Rat(want_n);
        if (frac > Rat(1, 2)) ++want_n;
        long want = want_n.convert_to<long>();
        std::stable_sort(score.begin(), score.end(),
                         [](const auto& x, const auto& y) { return x.first > y.first; });
        IntervalEvent chosen;
        for (long k = 0; k < want && k < static_cast<long>(score.size()); ++k) {
            long i = score[k].second;
            chosen = unite(chosen, IntervalEvent::interval(z * i, z * (i + 1)));
        }
        bound += rho(chosen, part);
        for (const auto& p : chosen.pieces()) raw.emplace_back(p);
    }
    Event approx = interval_event(std::move(raw));
    return {approx, bound, false};
}

} // namespace ergo

#endif
