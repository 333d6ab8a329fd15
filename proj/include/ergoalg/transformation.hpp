#ifndef ERGOALG_TRANSFORMATION_HPP
#define ERGOALG_TRANSFORMATION_HPP

#include <memory>
#include <optional>
#include <utility>
#include <variant>
#include <vector>

#include "algebra.hpp"
#include "config.hpp"
#include "errors.hpp"
#include "event.hpp"

namespace ergo {

enum class Dir { forward, inverse };

// Certified bounds for a quantity in [0,1].
struct Enclosure {
    Rat lo, hi;
    Rat gap() const { return hi - lo; }
    bool exact() const { return lo == hi; }
};

// ---------------------------------------------------------------------------
// Finite interval exchange transformations

struct IetPiece {
    Rat lo, hi, offset; // [lo,hi) translated by offset
    friend bool operator==(const IetPiece&, const IetPiece&) = default;
};

// A measure-preserving piecewise translation of [0,1). Canonical form:
// pieces sorted by source, adjacent pieces with equal offset merged; both
// the sources and the images tile [0,1) exactly (constructor enforced).
class IetMap {
public:
    static IetMap from_pieces(std::vector<IetPiece> pieces) {
        std::erase_if(pieces, [](const IetPiece& p) { return p.lo == p.hi; });
        if (pieces.empty()) throw domain_error("IET must cover [0,1)");
        std::sort(pieces.begin(), pieces.end(),
                  [](const IetPiece& a, const IetPiece& b) { return a.lo < b.lo; });
        std::vector<IetPiece> merged;
        for (auto& p : pieces) {
            if (p.lo > p.hi) throw domain_error("IET piece with lo > hi");
            if (!merged.empty() && merged.back().hi == p.lo && merged.back().offset == p.offset)
                merged.back().hi = p.hi;
            else
                merged.push_back(p);
        }
        if (merged.front().lo != 0 || merged.back().hi != 1)
            throw domain_error("IET sources do not tile [0,1)");
        for (std::size_t i = 0; i + 1 < merged.size(); ++i)
            if (merged[i].hi != merged[i + 1].lo) throw domain_error("IET sources do not tile [0,1)");
        // image partition check
        std::vector<std::pair<Rat, Rat>> imgs;
        for (const auto& p : merged) {
            Rat ilo = p.lo + p.offset, ihi = p.hi + p.offset;
            if (ilo < 0 || ihi > 1) throw domain_error("IET image outside [0,1)");
            imgs.emplace_back(ilo, ihi);
        }
        std::sort(imgs.begin(), imgs.end());
        if (imgs.front().first != 0 || imgs.back().second != 1)
            throw domain_error("IET images do not tile [0,1)");
        for (std::size_t i = 0; i + 1 < imgs.size(); ++i)
            if (imgs[i].second != imgs[i + 1].first)
                throw domain_error("IET images do not tile [0,1)");
        IetMap m;
        m.pieces_ = std::move(merged);
        return m;
    }

    static IetMap identity() { return from_pieces({{Rat(0), Rat(1), Rat(0)}}); }

    // x + r mod 1
    static IetMap rotation(const Rat& r) {
        Rat s = r;
        while (s < 0) s += 1;
        while (s >= 1) s -= 1;
        if (s == 0) return identity();
        return from_pieces({{Rat(0), 1 - s, s}, {1 - s, Rat(1), s - 1}});
    }

    const std::vector<IetPiece>& pieces() const { return pieces_; }
    bool is_identity() const { return pieces_.size() == 1 && pieces_[0].offset == 0; }
    friend bool operator==(const IetMap&, const IetMap&) = default;

    IetMap inverted() const {
        std::vector<IetPiece> inv;
        inv.reserve(pieces_.size());
        for (const auto& p : pieces_) inv.push_back({p.lo + p.offset, p.hi + p.offset, -p.offset});
        return from_pieces(std::move(inv));
    }

    // (f o g)(x) = f(g(x))
    friend IetMap compose(const IetMap& f, const IetMap& g) {
        std::vector<IetPiece> out;
        for (const auto& pg : g.pieces_) {
            Rat ilo = pg.lo + pg.offset, ihi = pg.hi + pg.offset;
            for (const auto& pf : f.pieces_) {
                Rat lo = std::max(ilo, pf.lo), hi = std::min(ihi, pf.hi);
                if (lo < hi) out.push_back({lo - pg.offset, hi - pg.offset, pg.offset + pf.offset});
            }
        }
        return from_pieces(std::move(out));
    }

    IetMap power(long k) const {
        IetMap acc = identity();
        IetMap base = k >= 0 ? *this : inverted();
        long n = k >= 0 ? k : -k;
        for (long i = 0; i < n; ++i) acc = compose(base, acc);
        return acc;
    }

    IntervalEvent map(const IntervalEvent& a, Dir d = Dir::forward) const {
        const IetMap& m = d == Dir::forward ? *this : tmp_inverse();
        std::vector<std::pair<Rat, Rat>> raw;
        for (const auto& [lo, hi] : a.pieces())
            for (const auto& p : m.pieces_) {
                Rat l = std::max(lo, p.lo), h = std::min(hi, p.hi);
                if (l < h) raw.emplace_back(l + p.offset, h + p.offset);
            }
        return IntervalEvent::from_raw(std::move(raw));
    }

    // {x : T(x) = x}: the zero-offset sources.
    IntervalEvent zero_offset_set() const {
        std::vector<std::pair<Rat, Rat>> raw;
        for (const auto& p : pieces_)
            if (p.offset == 0) raw.emplace_back(p.lo, p.hi);
        return IntervalEvent::from_raw(std::move(raw));
    }

private:
    IetMap tmp_inverse() const { return inverted(); }
    std::vector<IetPiece> pieces_;
};

// When every breakpoint and offset has denominator dividing q, the IET
// permutes the q cells [i/q,(i+1)/q). Every rational IET has such a q.
struct CellPermutation {
    Int q;
    std::vector<long> perm; // cell i maps to cell perm[i]
};

inline std::optional<CellPermutation> cell_permutation(const IetMap& m,
                                                       long max_cells = 2'000'000) {
    Int q = 1;
    for (const auto& p : m.pieces()) {
        q = boost::multiprecision::lcm(q, rat_den(p.lo));
        q = boost::multiprecision::lcm(q, rat_den(p.hi));
        q = boost::multiprecision::lcm(q, rat_den(p.offset));
        if (q > max_cells) return std::nullopt;
    }
    long n = q.convert_to<long>();
    CellPermutation cp;
    cp.q = q;
    cp.perm.assign(n, -1);
    for (const auto& p : m.pieces()) {
        long lo = (rat_num(p.lo) * (q / rat_den(p.lo))).convert_to<long>();
        long hi = (rat_num(p.hi) * (q / rat_den(p.hi))).convert_to<long>();
        long off = (rat_num(p.offset) * (q / rat_den(p.offset))).convert_to<long>();
        for (long i = lo; i < hi; ++i) cp.perm[i] = i + off;
    }
    return cp;
}

// ---------------------------------------------------------------------------
// Transformation backends and symbolic trees

struct OdometerMap {
    int base = 2; // p >= 2; add one with carry in base-p digits
    friend bool operator==(const OdometerMap&, const OdometerMap&) = default;
};

struct BernoulliShift {
    BernoulliCarrier carrier;
    friend bool operator==(const BernoulliShift&, const BernoulliShift&) = default;
};

class Transformation;
using TransPtr = std::shared_ptr<const Transformation>;

struct ProductMap {
    TransPtr left, right;
};
struct InverseMap {
    TransPtr inner;
};
struct ComposeMap {
    TransPtr f, g; // (f o g)(x) = f(g(x))
};

class Transformation {
public:
    using Variant = std::variant<IetMap, OdometerMap, BernoulliShift, ProductMap, InverseMap, ComposeMap>;

    static Transformation iet(IetMap m) { return Transformation(Variant(std::move(m))); }
    static Transformation odometer(int base) {
        if (base < 2) throw domain_error("odometer base must be >= 2");
        return Transformation(Variant(OdometerMap{base}));
    }
    static Transformation shift(BernoulliCarrier c) {
        return Transformation(Variant(BernoulliShift{std::move(c)}));
    }
    static Transformation product(Transformation l, Transformation r) {
        return Transformation(Variant(ProductMap{wrap(std::move(l)), wrap(std::move(r))}));
    }
    static Transformation inverse(Transformation t) {
        return Transformation(Variant(InverseMap{wrap(std::move(t))}));
    }
    static Transformation compose(Transformation f, Transformation g) {
        Transformation t(Variant(ComposeMap{wrap(std::move(f)), wrap(std::move(g))}));
        if (!(std::get<ComposeMap>(t.v_).f->carrier() == std::get<ComposeMap>(t.v_).g->carrier()))
            throw carrier_mismatch("composing maps on different carriers");
        return t;
    }
    // by^{-1} o inner o by
    static Transformation conjugate(Transformation inner, Transformation by) {
        Transformation g = by;
        return compose(inverse(std::move(by)), compose(std::move(inner), std::move(g)));
    }

    const Variant& node() const { return v_; }

    template <class T>
    const T* get_if() const {
        return std::get_if<T>(&v_);
    }

    Carrier carrier() const {
        if (auto* m = std::get_if<IetMap>(&v_)) { (void)m; return IntervalCarrier{}; }
        if (auto* o = std::get_if<OdometerMap>(&v_)) { (void)o; return IntervalCarrier{}; }
        if (auto* s = std::get_if<BernoulliShift>(&v_)) return s->carrier;
        if (auto* p = std::get_if<ProductMap>(&v_))
            return ProductCarrier{std::make_shared<Carrier>(p->left->carrier()),
                                  std::make_shared<Carrier>(p->right->carrier())};
        if (auto* i = std::get_if<InverseMap>(&v_)) return i->inner->carrier();
        return std::get<ComposeMap>(v_).f->carrier();
    }

    int tree_size() const {
        if (std::holds_alternative<ProductMap>(v_)) {
            const auto& p = std::get<ProductMap>(v_);
            return 1 + p.left->tree_size() + p.right->tree_size();
        }
        if (std::holds_alternative<InverseMap>(v_))
            return 1 + std::get<InverseMap>(v_).inner->tree_size();
        if (std::holds_alternative<ComposeMap>(v_)) {
            const auto& c = std::get<ComposeMap>(v_);
            return 1 + c.f->tree_size() + c.g->tree_size();
        }
        return 1;
    }

    friend bool operator==(const Transformation& a, const Transformation& b) {
        if (a.v_.index() != b.v_.index()) return false;
        if (auto* m = std::get_if<IetMap>(&a.v_)) return *m == std::get<IetMap>(b.v_);
        if (auto* o = std::get_if<OdometerMap>(&a.v_)) return *o == std::get<OdometerMap>(b.v_);
        if (auto* s = std::get_if<BernoulliShift>(&a.v_)) return *s == std::get<BernoulliShift>(b.v_);
        if (auto* p = std::get_if<ProductMap>(&a.v_)) {
            const auto& q = std::get<ProductMap>(b.v_);
            return *p->left == *q.left && *p->right == *q.right;
        }
        if (auto* i = std::get_if<InverseMap>(&a.v_))
            return *i->inner == *std::get<InverseMap>(b.v_).inner;
        const auto& x = std::get<ComposeMap>(a.v_);
        const auto& y = std::get<ComposeMap>(b.v_);
        return *x.f == *y.f && *x.g == *y.g;
    }

private:
    explicit Transformation(Variant v) : v_(std::move(v)) {}
    static TransPtr wrap(Transformation t) { return std::make_shared<Transformation>(std::move(t)); }
    Variant v_;
};

// ---------------------------------------------------------------------------
// Odometer piece expansion

// Piece k of the base-p odometer (first k-1 digits maximal, k-th digit not):
// source [1-p^{1-k}, 1-p^{-k}), a translation by p^{1-k} + p^{-k} - 1.
inline IetPiece odometer_piece(int base, int k) {
    Rat pk = Rat(1, boost::multiprecision::pow(Int(base), static_cast<unsigned>(k)));
    Rat pk1 = pk * base;
    return {1 - pk1, 1 - pk, pk1 + pk - 1};
}

// The period-p^K cycle obtained by truncating the odometer at depth K: the
// depth-K tail maps onto [0, p^-K) as a single translated block.
inline IetMap truncated_odometer(int base, int depth) {
    std::vector<IetPiece> pieces;
    for (int k = 1; k <= depth; ++k) pieces.push_back(odometer_piece(base, k));
    Rat tail = Rat(1, boost::multiprecision::pow(Int(base), static_cast<unsigned>(depth)));
    pieces.push_back({1 - tail, Rat(1), tail - 1});
    return IetMap::from_pieces(std::move(pieces));
}

// Exact image/preimage of an interval event under the odometer. The
// expansion depth is taken from the event: the depth-K tail near 1 (near 0
// for the inverse) is mapped as a block once the event either contains it or
// misses it, which identifies the result mod null sets.
inline IntervalEvent odometer_map_event(int base, const IntervalEvent& a, Dir d) {
    if (a.is_empty()) return a;
    if (a == IntervalEvent::full()) return a;
    const auto& ps = a.pieces();
    int K = 1;
    Rat pk(1, base);
    auto tail_resolved = [&](const Rat& eps) {
        if (d == Dir::forward) {
            // tail = [1-eps, 1)
            Rat last_hi = ps.back().second, last_lo = ps.back().first;
            if (last_hi < 1) return Rat(1) - eps >= last_hi;
            return Rat(1) - eps >= last_lo;
        }
        // inverse: tail = [0, eps)
        Rat first_lo = ps.front().first, first_hi = ps.front().second;
        if (first_lo > 0) return eps <= first_lo;
        return eps <= first_hi;
    };
    while (!tail_resolved(pk)) {
        ++K;
        pk /= base;
        if (K > 1'000'000) throw budget_error("odometer expansion depth exceeded");
    }
    std::vector<std::pair<Rat, Rat>> raw;
    auto add_piece_image = [&](const IetPiece& p) {
        for (const auto& [lo, hi] : ps) {
            Rat l = std::max(lo, p.lo), h = std::min(hi, p.hi);
            if (l < h) raw.emplace_back(l + p.offset, h + p.offset);
        }
    };
    for (int k = 1; k <= K; ++k) {
        IetPiece p = odometer_piece(base, k);
        if (d == Dir::inverse) p = {p.lo + p.offset, p.hi + p.offset, -p.offset};
        add_piece_image(p);
    }
    if (d == Dir::forward) {
        // tail [1-pk,1) maps onto [0,pk) as a set
        if (ps.back().second == 1) raw.emplace_back(Rat(0), pk);
    } else {
        // [0,pk) maps back onto [1-pk,1)
        if (ps.front().first == 0) raw.emplace_back(Rat(1) - pk, Rat(1));
    }
    return IntervalEvent::from_raw(std::move(raw));
}

// ---------------------------------------------------------------------------
// map_event over the full backend family

inline Event map_event(const Transformation& T, const Event& a, Dir d = Dir::forward,
                       const Config& cfg = Config::defaults());

namespace detail {

inline Event map_node(const Transformation& T, const Event& a, Dir d, const Config& cfg, int depth) {
    if (depth > cfg.symbolic_depth)
        throw budget_error("symbolic tree exceeds configured expansion depth");
    if (auto* m = T.get_if<IetMap>()) return Event(m->map(a.as_interval(), d));
    if (auto* o = T.get_if<OdometerMap>()) return Event(odometer_map_event(o->base, a.as_interval(), d));
    if (auto* s = T.get_if<BernoulliShift>()) {
        if (!(a.carrier() == Carrier(s->carrier))) throw carrier_mismatch("shift carrier mismatch");
        return Event(a.as_cylinder().shifted(d == Dir::forward ? 1 : -1));
    }
    if (auto* p = T.get_if<ProductMap>()) {
        const RectData& r = a.as_rect();
        std::vector<std::pair<Event, Event>> out;
        for (const auto& [l, rr] : r.rects)
            out.emplace_back(map_node(*p->left, l, d, cfg, depth + 1),
                             map_node(*p->right, rr, d, cfg, depth + 1));
        return Event::rect_union(r.carrier, std::move(out));
    }
    if (auto* i = T.get_if<InverseMap>())
        return map_node(*i->inner, a, d == Dir::forward ? Dir::inverse : Dir::forward, cfg, depth + 1);
    const auto& c = std::get<ComposeMap>(T.node());
    if (d == Dir::forward)
        return map_node(*c.f, map_node(*c.g, a, d, cfg, depth + 1), d, cfg, depth + 1);
    return map_node(*c.g, map_node(*c.f, a, d, cfg, depth + 1), d, cfg, depth + 1);
}

} // namespace detail

inline Event map_event(const Transformation& T, const Event& a, Dir d, const Config& cfg) {
    if (!(T.carrier() == a.carrier())) throw carrier_mismatch("map_event carrier mismatch");
    return detail::map_node(T, a, d, cfg, 0);
}

// tau^k(a); k = 0 is the identity, negative k uses the inverse.
inline Event iterate_image(const Transformation& T, long k, const Event& a,
                           const Config& cfg = Config::defaults()) {
    Event cur = a;
    Dir d = k >= 0 ? Dir::forward : Dir::inverse;
    for (long i = 0, n = k >= 0 ? k : -k; i < n; ++i) cur = map_event(T, cur, d, cfg);
    return cur;
}

// Reduces a symbolic tree to a single IET when all leaves are IETs.
inline std::optional<IetMap> reduce_to_iet(const Transformation& T) {
    if (auto* m = T.get_if<IetMap>()) return *m;
    if (T.get_if<OdometerMap>() || T.get_if<BernoulliShift>() || T.get_if<ProductMap>())
        return std::nullopt;
    if (auto* i = T.get_if<InverseMap>()) {
        auto inner = reduce_to_iet(*i->inner);
        if (!inner) return std::nullopt;
        return inner->inverted();
    }
    const auto& c = std::get<ComposeMap>(T.node());
    auto f = reduce_to_iet(*c.f), g = reduce_to_iet(*c.g);
    if (!f || !g) return std::nullopt;
    return compose(*f, *g);
}

// Net power when the tree is built purely from one Bernoulli shift.
inline std::optional<long> net_shift_power(const Transformation& T) {
    if (T.get_if<BernoulliShift>()) return 1;
    if (auto* i = T.get_if<InverseMap>()) {
        auto k = net_shift_power(*i->inner);
        if (!k) return std::nullopt;
        return -*k;
    }
    if (auto* c = T.get_if<ComposeMap>()) {
        auto f = net_shift_power(*c->f), g = net_shift_power(*c->g);
        if (!f || !g) return std::nullopt;
        return *f + *g;
    }
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Partial translation forms and the certified uniform metric

// A partial description of an interval-carrier automorphism: exact
// translations on the listed pieces, undetermined on `unknown_src` (whose
// image is `unknown_img` mod null, by measure preservation).
struct PiecewiseForm {
    std::vector<IetPiece> pieces;
    IntervalEvent unknown_src;
    IntervalEvent unknown_img;

    static PiecewiseForm exact(const IetMap& m) {
        return {m.pieces(), IntervalEvent::empty(), IntervalEvent::empty()};
    }

    PiecewiseForm inverted() const {
        PiecewiseForm out;
        out.pieces.reserve(pieces.size());
        for (const auto& p : pieces) out.pieces.push_back({p.lo + p.offset, p.hi + p.offset, -p.offset});
        std::sort(out.pieces.begin(), out.pieces.end(),
                  [](const IetPiece& a, const IetPiece& b) { return a.lo < b.lo; });
        out.unknown_src = unknown_img;
        out.unknown_img = unknown_src;
        return out;
    }

    friend PiecewiseForm compose(const PiecewiseForm& f, const PiecewiseForm& g) {
        PiecewiseForm out;
        std::vector<std::pair<Rat, Rat>> src_raw, img_raw;
        for (const auto& pg : g.pieces) {
            Rat ilo = pg.lo + pg.offset, ihi = pg.hi + pg.offset;
            for (const auto& pf : f.pieces) {
                Rat lo = std::max(ilo, pf.lo), hi = std::min(ihi, pf.hi);
                if (lo < hi) {
                    out.pieces.push_back({lo - pg.offset, hi - pg.offset, pg.offset + pf.offset});
                    src_raw.emplace_back(lo - pg.offset, hi - pg.offset);
                    img_raw.emplace_back(lo + pf.offset, hi + pf.offset);
                }
            }
        }
        std::sort(out.pieces.begin(), out.pieces.end(),
                  [](const IetPiece& a, const IetPiece& b) { return a.lo < b.lo; });
        out.unknown_src = complement(IntervalEvent::from_raw(std::move(src_raw)));
        out.unknown_img = complement(IntervalEvent::from_raw(std::move(img_raw)));
        return out;
    }
};

inline PiecewiseForm expand_form(const Transformation& T, int depth,
                                 const Config& cfg = Config::defaults()) {
    if (auto* m = T.get_if<IetMap>()) return PiecewiseForm::exact(*m);
    if (auto* o = T.get_if<OdometerMap>()) {
        PiecewiseForm out;
        for (int k = 1; k <= depth; ++k) out.pieces.push_back(odometer_piece(o->base, k));
        Rat tail(1, boost::multiprecision::pow(Int(o->base), static_cast<unsigned>(depth)));
        out.unknown_src = IntervalEvent::interval(1 - tail, Rat(1));
        out.unknown_img = IntervalEvent::interval(Rat(0), tail);
        return out;
    }
    if (auto* i = T.get_if<InverseMap>()) return expand_form(*i->inner, depth, cfg).inverted();
    if (auto* c = T.get_if<ComposeMap>())
        return compose(expand_form(*c->f, depth, cfg), expand_form(*c->g, depth, cfg));
    throw carrier_mismatch("piecewise expansion requires an interval-carrier map");
}

namespace detail {

// Enclosure of rho(T1,T2) from two partial forms. Regions where both are
// translations compare exactly; an undetermined region still counts as
// certain disagreement when the two images of that region are disjoint sets.
inline Enclosure rho_from_forms(const PiecewiseForm& a, const PiecewiseForm& b) {
    Rat agree = 0, disagree = 0;
    for (const auto& pa : a.pieces)
        for (const auto& pb : b.pieces) {
            Rat lo = std::max(pa.lo, pb.lo), hi = std::min(pa.hi, pb.hi);
            if (lo < hi) (pa.offset == pb.offset ? agree : disagree) += hi - lo;
        }
    auto certain_miss = [](const IntervalEvent& region, const IntervalEvent& img1,
                           const IntervalEvent& img2) {
        return !region.is_empty() && intersect(img1, img2).is_empty();
    };
    Rat extra = 0;
    for (const auto& pb : b.pieces) {
        IntervalEvent part = intersect(a.unknown_src, IntervalEvent::interval(pb.lo, pb.hi));
        if (part.is_empty()) continue;
        std::vector<std::pair<Rat, Rat>> shifted;
        for (const auto& [lo, hi] : part.pieces()) shifted.emplace_back(lo + pb.offset, hi + pb.offset);
        IntervalEvent img_b = IntervalEvent::from_raw(std::move(shifted));
        if (certain_miss(part, a.unknown_img, img_b)) extra += part.measure();
    }
    for (const auto& pa : a.pieces) {
        IntervalEvent part = intersect(b.unknown_src, IntervalEvent::interval(pa.lo, pa.hi));
        if (part.is_empty()) continue;
        std::vector<std::pair<Rat, Rat>> shifted;
        for (const auto& [lo, hi] : part.pieces()) shifted.emplace_back(lo + pa.offset, hi + pa.offset);
        IntervalEvent img_a = IntervalEvent::from_raw(std::move(shifted));
        if (certain_miss(part, b.unknown_img, img_a)) extra += part.measure();
    }
    IntervalEvent both = intersect(a.unknown_src, b.unknown_src);
    if (certain_miss(both, a.unknown_img, b.unknown_img)) extra += both.measure();
    Rat lo = disagree + extra;
    Rat hi = 1 - agree;
    return {lo, hi};
}

} // namespace detail

// Certified enclosure of rho(T1,T2) = m{x : T1 x != T2 x}, narrowed by
// doubling the expansion depth until hi - lo <= gap (or both maps admit a
// finite common refinement, in which case the result is exact).
inline Enclosure rho_maps(const Transformation& T1, const Transformation& T2, const Rat& gap,
                          const Config& cfg = Config::defaults()) {
    if (!(T1.carrier() == T2.carrier())) throw carrier_mismatch("rho_maps carrier mismatch");
    if (gap <= 0) throw domain_error("rho_maps needs gap > 0");
    if (T1 == T2) return {Rat(0), Rat(0)};
    Carrier c = T1.carrier();
    if (std::holds_alternative<BernoulliCarrier>(c)) {
        auto k1 = net_shift_power(T1), k2 = net_shift_power(T2);
        if (k1 && k2) {
            // sigma^k vs sigma^l differ everywhere off the null fixed set of
            // sigma^{l-k}.
            return *k1 == *k2 ? Enclosure{Rat(0), Rat(0)} : Enclosure{Rat(1), Rat(1)};
        }
        throw domain_error("rho_maps on this cylinder-carrier pair is not supported");
    }
    if (std::holds_alternative<ProductCarrier>(c)) {
        auto* p1 = T1.get_if<ProductMap>();
        auto* p2 = T2.get_if<ProductMap>();
        if (!p1 || !p2) throw domain_error("rho_maps on product carrier needs product maps");
        Enclosure a = rho_maps(*p1->left, *p2->left, gap / 2, cfg);
        Enclosure b = rho_maps(*p1->right, *p2->right, gap / 2, cfg);
        // differs iff either component differs
        auto comb = [](const Rat& x, const Rat& y) { return 1 - (1 - x) * (1 - y); };
        return {comb(a.lo, b.lo), comb(a.hi, b.hi)};
    }
    for (int depth = 2; depth <= cfg.refine_depth; depth *= 2) {
        PiecewiseForm f1 = expand_form(T1, depth, cfg);
        PiecewiseForm f2 = expand_form(T2, depth, cfg);
        Enclosure e = detail::rho_from_forms(f1, f2);
        if (e.gap() <= gap) return e;
    }
    throw budget_error("rho_maps refinement did not reach the requested gap within budget");
}

// Zero-offset sources of a partial form.
inline IntervalEvent zero_offset_set(const PiecewiseForm& f) {
    std::vector<std::pair<Rat, Rat>> raw;
    for (const auto& p : f.pieces)
        if (p.offset == 0) raw.emplace_back(p.lo, p.hi);
    return IntervalEvent::from_raw(std::move(raw));
}

// Exact event {x : T^i x = x}. IET-reducible trees compose exactly; trees
// with odometer leaves certify via image disjointness of the undetermined
// region; pure shift trees have null fixed sets for nonzero net power.
inline Event fixed_set(const Transformation& T, long i, const Config& cfg = Config::defaults()) {
    if (i <= 0) throw domain_error("fixed_set needs i >= 1");
    Carrier c = T.carrier();
    if (std::holds_alternative<BernoulliCarrier>(c)) {
        auto k = net_shift_power(T);
        if (!k) throw domain_error("fixed_set: irreducible cylinder-carrier tree");
        const auto& bc = std::get<BernoulliCarrier>(c);
        return *k * i == 0 ? Event(CylinderEvent::full(bc)) : Event(CylinderEvent::empty(bc));
    }
    if (std::holds_alternative<ProductCarrier>(c)) {
        auto* p = T.get_if<ProductMap>();
        if (!p) throw domain_error("fixed_set: irreducible product-carrier tree");
        Event l = fixed_set(*p->left, i, cfg);
        Event r = fixed_set(*p->right, i, cfg);
        return Event::rect_union(std::get<ProductCarrier>(c), {{l, r}});
    }
    if (auto m = reduce_to_iet(T)) {
        return Event(m->power(i).zero_offset_set());
    }
    for (int depth = 2; depth <= cfg.refine_depth; depth *= 2) {
        PiecewiseForm f = expand_form(T, depth, cfg);
        PiecewiseForm fi = f;
        for (long k = 1; k < i; ++k) fi = compose(f, fi);
        if (intersect(fi.unknown_src, fi.unknown_img).is_empty())
            return Event(zero_offset_set(fi));
        // otherwise the undetermined region might contain fixed points; refine
    }
    throw budget_error("fixed_set: refinement budget exceeded on symbolic tree");
}

// ---------------------------------------------------------------------------
// The Halmos rearrangement: equal-measure interval events are automorphic.

// Returns the order-preserving (leftmost matching) eta with eta(a) = b and
// eta(complement a) = complement b, as an exact IET.
inline IetMap rearrangement(const IntervalEvent& a, const IntervalEvent& b) {
    if (a.measure() != b.measure()) throw domain_error("rearrangement needs equal measures");
    std::vector<IetPiece> out;
    auto zip = [&out](const IntervalEvent& src, const IntervalEvent& dst) {
        auto s = src.pieces();
        auto d = dst.pieces();
        std::size_t i = 0, j = 0;
        Rat spos = s.empty() ? Rat(0) : s[0].first;
        Rat dpos = d.empty() ? Rat(0) : d[0].first;
        while (i < s.size() && j < d.size()) {
            Rat slen = s[i].second - spos, dlen = d[j].second - dpos;
            Rat len = std::min(slen, dlen);
            out.push_back({spos, spos + len, dpos - spos});
            spos += len;
            dpos += len;
            if (spos == s[i].second && ++i < s.size()) spos = s[i].first;
            if (dpos == d[j].second && ++j < d.size()) dpos = d[j].first;
        }
    };
    zip(a, b);
    zip(complement(a), complement(b));
    return IetMap::from_pieces(std::move(out));
}

} // namespace ergo

#endif
