#ifndef ERGOALG_EVENT_HPP
#define ERGOALG_EVENT_HPP

#include <compare>
#include <memory>
#include <utility>
#include <variant>
#include <vector>

#include "cylinder_event.hpp"
#include "errors.hpp"
#include "interval_event.hpp"
#include "rational.hpp"

namespace ergo {

class Event;

// Carrier descriptor: which measure space an event lives on. Events on
// different carriers never mix.
struct IntervalCarrier {
    friend bool operator==(const IntervalCarrier&, const IntervalCarrier&) { return true; }
};

struct ProductCarrier;

using Carrier = std::variant<IntervalCarrier, BernoulliCarrier, ProductCarrier>;

struct ProductCarrier {
    std::shared_ptr<const Carrier> left;
    std::shared_ptr<const Carrier> right;
    friend bool operator==(const ProductCarrier& a, const ProductCarrier& b);
};

bool operator==(const Carrier& a, const Carrier& b);

inline bool operator==(const ProductCarrier& a, const ProductCarrier& b) {
    return *a.left == *b.left && *a.right == *b.right;
}

// Canonical disjoint-rectangle form on a product carrier: the fiber
// partition. Left components are pairwise disjoint, right components
// pairwise distinct and nonempty, rectangles sorted by left component.
struct RectData {
    ProductCarrier carrier;
    std::vector<std::pair<Event, Event>> rects;
};

class Event {
public:
    Event() : data_(IntervalEvent{}) {}
    explicit Event(IntervalEvent e) : data_(std::move(e)) {}
    explicit Event(CylinderEvent e) : data_(std::move(e)) {}
    explicit Event(RectData e);

    static Event empty(const Carrier& c);
    static Event full(const Carrier& c);

    // Canonical rectangle union: refines lefts to the generated partition,
    // unions fibers, merges equal fibers, sorts. normalize() for rects.
    static Event rect_union(const ProductCarrier& c, std::vector<std::pair<Event, Event>> raw);

    const IntervalEvent& as_interval() const {
        if (auto* p = std::get_if<IntervalEvent>(&data_)) return *p;
        throw carrier_mismatch("expected interval-carrier event");
    }
    const CylinderEvent& as_cylinder() const {
        if (auto* p = std::get_if<CylinderEvent>(&data_)) return *p;
        throw carrier_mismatch("expected cylinder-carrier event");
    }
    const RectData& as_rect() const {
        if (auto* p = std::get_if<RectData>(&data_)) return *p;
        throw carrier_mismatch("expected product-carrier event");
    }
    bool is_interval() const { return std::holds_alternative<IntervalEvent>(data_); }
    bool is_cylinder() const { return std::holds_alternative<CylinderEvent>(data_); }
    bool is_rect() const { return std::holds_alternative<RectData>(data_); }

    Carrier carrier() const;
    Rat measure() const;
    bool is_empty() const;

    friend bool operator==(const Event& a, const Event& b);
    std::strong_ordering order(const Event& o) const;
    bool operator<(const Event& o) const { return order(o) == std::strong_ordering::less; }

    friend Event unite(const Event& a, const Event& b);
    friend Event intersect(const Event& a, const Event& b);
    friend Event subtract(const Event& a, const Event& b);
    friend Event symdiff(const Event& a, const Event& b);
    friend Event complement(const Event& a);

private:
    static void check_same(const Event& a, const Event& b);
    template <class OpI, class OpR>
    static Event dispatch(const Event& a, const Event& b, OpI opi, OpR rect_op);

    std::variant<IntervalEvent, CylinderEvent, RectData> data_;
};

inline bool operator==(const Carrier& a, const Carrier& b) {
    if (a.index() != b.index()) return false;
    if (std::holds_alternative<IntervalCarrier>(a)) return true;
    if (std::holds_alternative<BernoulliCarrier>(a))
        return std::get<BernoulliCarrier>(a) == std::get<BernoulliCarrier>(b);
    return std::get<ProductCarrier>(a) == std::get<ProductCarrier>(b);
}

inline Event::Event(RectData e) : data_(std::move(e)) {}

inline Carrier Event::carrier() const {
    if (is_interval()) return IntervalCarrier{};
    if (is_cylinder()) return std::get<CylinderEvent>(data_).carrier();
    return std::get<RectData>(data_).carrier;
}

inline Event Event::empty(const Carrier& c) {
    if (std::holds_alternative<IntervalCarrier>(c)) return Event(IntervalEvent::empty());
    if (std::holds_alternative<BernoulliCarrier>(c))
        return Event(CylinderEvent::empty(std::get<BernoulliCarrier>(c)));
    return Event(RectData{std::get<ProductCarrier>(c), {}});
}

inline Event Event::full(const Carrier& c) {
    if (std::holds_alternative<IntervalCarrier>(c)) return Event(IntervalEvent::full());
    if (std::holds_alternative<BernoulliCarrier>(c))
        return Event(CylinderEvent::full(std::get<BernoulliCarrier>(c)));
    const auto& pc = std::get<ProductCarrier>(c);
    return rect_union(pc, {{full(*pc.left), full(*pc.right)}});
}

inline Rat Event::measure() const {
    if (is_interval()) return std::get<IntervalEvent>(data_).measure();
    if (is_cylinder()) return std::get<CylinderEvent>(data_).measure();
    Rat m = 0;
    for (const auto& [l, r] : std::get<RectData>(data_).rects) m += l.measure() * r.measure();
    return m;
}

inline bool Event::is_empty() const {
    if (is_interval()) return std::get<IntervalEvent>(data_).is_empty();
    if (is_cylinder()) return std::get<CylinderEvent>(data_).is_empty();
    return std::get<RectData>(data_).rects.empty();
}

inline bool operator==(const Event& a, const Event& b) {
    if (a.data_.index() != b.data_.index()) return false;
    if (a.is_interval()) return std::get<IntervalEvent>(a.data_) == std::get<IntervalEvent>(b.data_);
    if (a.is_cylinder()) return std::get<CylinderEvent>(a.data_) == std::get<CylinderEvent>(b.data_);
    const auto& ra = std::get<RectData>(a.data_);
    const auto& rb = std::get<RectData>(b.data_);
    return ra.carrier == rb.carrier && ra.rects == rb.rects;
}

inline std::strong_ordering Event::order(const Event& o) const {
    if (data_.index() != o.data_.index()) return data_.index() <=> o.data_.index();
    if (is_interval()) return std::get<IntervalEvent>(data_).order(std::get<IntervalEvent>(o.data_));
    if (is_cylinder()) return std::get<CylinderEvent>(data_).order(std::get<CylinderEvent>(o.data_));
    const auto& ra = std::get<RectData>(data_);
    const auto& rb = std::get<RectData>(o.data_);
    std::size_t n = std::min(ra.rects.size(), rb.rects.size());
    for (std::size_t i = 0; i < n; ++i) {
        auto c = ra.rects[i].first.order(rb.rects[i].first);
        if (c != std::strong_ordering::equal) return c;
        c = ra.rects[i].second.order(rb.rects[i].second);
        if (c != std::strong_ordering::equal) return c;
    }
    return ra.rects.size() <=> rb.rects.size();
}

inline void Event::check_same(const Event& a, const Event& b) {
    if (!(a.carrier() == b.carrier())) throw carrier_mismatch("events on different carriers");
}

inline Event Event::rect_union(const ProductCarrier& c, std::vector<std::pair<Event, Event>> raw) {
    for (auto& [l, r] : raw) {
        if (!(l.carrier() == *c.left) || !(r.carrier() == *c.right))
            throw carrier_mismatch("rectangle factor on wrong carrier");
    }
    std::erase_if(raw, [](const auto& p) { return p.first.is_empty() || p.second.is_empty(); });
    if (raw.empty()) return Event(RectData{c, {}});
    // Fiber partition: atoms of the partition generated by the left
    // components, each with the union of the rights covering it.
    std::vector<std::pair<Event, Event>> atoms; // (left piece, fiber)
    for (const auto& [l, r] : raw) {
        std::vector<std::pair<Event, Event>> next;
        Event rest = l;
        for (auto& [al, ar] : atoms) {
            Event in = intersect(al, l);
            Event out = subtract(al, l);
            if (!in.is_empty()) next.emplace_back(in, unite(ar, r));
            if (!out.is_empty()) next.emplace_back(out, ar);
            rest = subtract(rest, al);
        }
        if (!rest.is_empty()) next.emplace_back(rest, r);
        atoms = std::move(next);
    }
    // Merge atoms with identical fibers.
    std::vector<std::pair<Event, Event>> merged; // (fiber, left union)
    for (auto& [al, ar] : atoms) {
        bool found = false;
        for (auto& [fr, fl] : merged) {
            if (fr == ar) {
                fl = unite(fl, al);
                found = true;
                break;
            }
        }
        if (!found) merged.emplace_back(ar, al);
    }
    RectData out{c, {}};
    for (auto& [fr, fl] : merged) out.rects.emplace_back(std::move(fl), std::move(fr));
    std::sort(out.rects.begin(), out.rects.end(),
              [](const auto& x, const auto& y) { return x.first < y.first; });
    return Event(std::move(out));
}

template <class OpI, class OpR>
Event Event::dispatch(const Event& a, const Event& b, OpI opi, OpR rect_op) {
    check_same(a, b);
    if (a.is_interval())
        return Event(opi(std::get<IntervalEvent>(a.data_), std::get<IntervalEvent>(b.data_)));
    if (a.is_cylinder())
        return Event(opi(std::get<CylinderEvent>(a.data_), std::get<CylinderEvent>(b.data_)));
    return rect_op(std::get<RectData>(a.data_), std::get<RectData>(b.data_));
}

// Product-carrier boolean ops go through the common refinement of both
// fiber partitions; the per-atom fibers then combine pointwise.
template <class Op>
inline Event rect_pointwise(const RectData& a, const RectData& b, Op op) {
    const ProductCarrier& c = a.carrier;
    auto fiber_at = [&](const RectData& r, const Event& piece) -> Event {
        // piece is contained in one cell of r's left partition or disjoint
        // from all of them; find it.
        for (const auto& [l, f] : r.rects)
            if (intersect(piece, l) == piece) return f;
        return Event::empty(*c.right);
    };
    // Build the common refinement of left components of a and b.
    std::vector<Event> cells;
    cells.push_back(Event::full(*c.left));
    auto refine = [&](const Event& l) {
        std::vector<Event> next;
        for (const auto& cell : cells) {
            Event in = intersect(cell, l), out = subtract(cell, l);
            if (!in.is_empty()) next.push_back(in);
            if (!out.is_empty()) next.push_back(out);
        }
        cells = std::move(next);
    };
    for (const auto& [l, f] : a.rects) refine(l);
    for (const auto& [l, f] : b.rects) refine(l);
    std::vector<std::pair<Event, Event>> out;
    for (const auto& cell : cells) {
        Event fa = fiber_at(a, cell), fb = fiber_at(b, cell);
        Event f = op(fa, fb);
        if (!f.is_empty()) out.emplace_back(cell, f);
    }
    return Event::rect_union(c, std::move(out));
}

inline Event unite(const Event& a, const Event& b) {
    return Event::dispatch(
        a, b, [](const auto& x, const auto& y) { return unite(x, y); },
        [](const RectData& x, const RectData& y) {
            return rect_pointwise(x, y, [](const Event& u, const Event& v) { return unite(u, v); });
        });
}
inline Event intersect(const Event& a, const Event& b) {
    return Event::dispatch(
        a, b, [](const auto& x, const auto& y) { return intersect(x, y); },
        [](const RectData& x, const RectData& y) {
            return rect_pointwise(x, y,
                                  [](const Event& u, const Event& v) { return intersect(u, v); });
        });
}
inline Event subtract(const Event& a, const Event& b) {
    return Event::dispatch(
        a, b, [](const auto& x, const auto& y) { return subtract(x, y); },
        [](const RectData& x, const RectData& y) {
            return rect_pointwise(x, y,
                                  [](const Event& u, const Event& v) { return subtract(u, v); });
        });
}
inline Event symdiff(const Event& a, const Event& b) {
    return Event::dispatch(
        a, b, [](const auto& x, const auto& y) { return symdiff(x, y); },
        [](const RectData& x, const RectData& y) {
            return rect_pointwise(x, y,
                                  [](const Event& u, const Event& v) { return symdiff(u, v); });
        });
}
inline Event complement(const Event& a) {
    return subtract(Event::full(a.carrier()), a);
}

inline Rat rho(const Event& a, const Event& b) { return symdiff(a, b).measure(); }

inline bool subset(const Event& a, const Event& b) { return subtract(a, b).is_empty(); }

// Convenience constructors.
inline Event interval_event(std::vector<std::pair<Rat, Rat>> raw) {
    return Event(IntervalEvent::from_raw(std::move(raw)));
}
inline Event interval_event(const Rat& lo, const Rat& hi) {
    return Event(IntervalEvent::interval(lo, hi));
}

} // namespace ergo

#endif
