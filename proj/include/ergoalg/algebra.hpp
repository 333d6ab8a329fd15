#ifndef ERGOALG_ALGEBRA_HPP
#define ERGOALG_ALGEBRA_HPP

#include <algorithm>
#include <vector>

#include "event.hpp"

namespace ergo {

// A finite partition of the space into positive-measure atoms, kept in
// canonical (sorted) order. The trivial algebra has the single atom X.
class FiniteAlgebra {
public:
    FiniteAlgebra() = default;

    static FiniteAlgebra trivial(const Carrier& c) {
        FiniteAlgebra a;
        a.atoms_.push_back(Event::full(c));
        return a;
    }

    // Atoms must be pairwise disjoint with union X; zero-measure atoms are
    // not admitted.
    static FiniteAlgebra from_atoms(std::vector<Event> atoms) {
        if (atoms.empty()) throw domain_error("algebra needs at least one atom");
        Carrier c = atoms.front().carrier();
        Event seen = Event::empty(c);
        for (const auto& a : atoms) {
            if (!(a.carrier() == c)) throw carrier_mismatch("algebra atoms on different carriers");
            if (a.is_empty()) throw domain_error("algebra atom has measure zero");
            if (!intersect(seen, a).is_empty()) throw domain_error("algebra atoms overlap");
            seen = unite(seen, a);
        }
        if (!(seen == Event::full(c))) throw domain_error("algebra atoms do not cover the space");
        std::sort(atoms.begin(), atoms.end());
        FiniteAlgebra out;
        out.atoms_ = std::move(atoms);
        return out;
    }

    const std::vector<Event>& atoms() const { return atoms_; }
    std::size_t size() const { return atoms_.size(); }
    Carrier carrier() const { return atoms_.front().carrier(); }
    bool is_trivial() const { return atoms_.size() == 1; }

    friend bool operator==(const FiniteAlgebra& a, const FiniteAlgebra& b) {
        return a.atoms_ == b.atoms_;
    }

    // True when `e` is exactly a union of atoms.
    bool spans(const Event& e) const {
        Event u = Event::empty(e.carrier());
        for (const auto& a : atoms_)
            if (subset(a, e)) u = unite(u, a);
        return u == e;
    }

    // Refines this algebra by another (the join A v B).
    friend FiniteAlgebra join(const FiniteAlgebra& a, const FiniteAlgebra& b) {
        std::vector<Event> out;
        for (const auto& x : a.atoms_)
            for (const auto& y : b.atoms_) {
                Event cell = intersect(x, y);
                if (!cell.is_empty()) out.push_back(std::move(cell));
            }
        return from_atoms(std::move(out));
    }

    // True when every atom of `a` is a union of atoms of this (i.e. this
    // refines a).
    bool refines(const FiniteAlgebra& a) const {
        for (const auto& x : a.atoms_)
            if (!spans(x)) return false;
        return true;
    }

private:
    std::vector<Event> atoms_;
};

// The finite algebra generated by a set of events: atoms are the nonempty
// Boolean combinations. Empty input yields the trivial algebra.
inline FiniteAlgebra generated_algebra(const std::vector<Event>& events, const Carrier& carrier) {
    std::vector<Event> atoms{Event::full(carrier)};
    for (const auto& e : events) {
        if (!(e.carrier() == carrier)) throw carrier_mismatch("generators on different carriers");
        std::vector<Event> next;
        for (const auto& a : atoms) {
            Event in = intersect(a, e), out = subtract(a, e);
            if (!in.is_empty()) next.push_back(std::move(in));
            if (!out.is_empty()) next.push_back(std::move(out));
        }
        atoms = std::move(next);
    }
    return FiniteAlgebra::from_atoms(std::move(atoms));
}

inline FiniteAlgebra generated_algebra(const std::vector<Event>& events) {
    if (events.empty()) throw domain_error("cannot infer carrier from empty generator list");
    return generated_algebra(events, events.front().carrier());
}

} // namespace ergo

#endif
