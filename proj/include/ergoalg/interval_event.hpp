#ifndef ERGOALG_INTERVAL_EVENT_HPP
#define ERGOALG_INTERVAL_EVENT_HPP

#include <algorithm>
#include <compare>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "rational.hpp"

namespace ergo {

// Canonical measure-class representative on [0,1): an ordered list of
// disjoint, non-adjacent half-open intervals [lo,hi). Equality mod null
// sets is structural equality of this form.
class IntervalEvent {
public:
    using Piece = std::pair<Rat, Rat>;

    IntervalEvent() = default;

    // normalize: sorts, drops empty pieces, merges overlaps and adjacencies.
    // Errors: endpoint outside [0,1], lo > hi.
    static IntervalEvent from_raw(std::vector<Piece> raw) {
        for (auto& [lo, hi] : raw) {
            if (lo < 0 || hi > 1) throw domain_error("interval endpoint outside [0,1]");
            if (lo > hi) throw domain_error("interval with lo > hi");
        }
        std::erase_if(raw, [](const Piece& p) { return p.first == p.second; });
        std::sort(raw.begin(), raw.end());
        std::vector<Piece> out;
        for (auto& p : raw) {
            if (!out.empty() && p.first <= out.back().second) {
                if (p.second > out.back().second) out.back().second = p.second;
            } else {
                out.push_back(p);
            }
        }
        IntervalEvent e;
        e.pieces_ = std::move(out);
        return e;
    }

    static IntervalEvent empty() { return IntervalEvent(); }
    static IntervalEvent full() { return from_raw({{Rat(0), Rat(1)}}); }
    static IntervalEvent interval(const Rat& lo, const Rat& hi) { return from_raw({{lo, hi}}); }

    const std::vector<Piece>& pieces() const { return pieces_; }
    bool is_empty() const { return pieces_.empty(); }

    Rat measure() const {
        Rat m = 0;
        for (const auto& [lo, hi] : pieces_) m += hi - lo;
        return m;
    }

    bool contains(const Rat& x) const {
        auto it = std::upper_bound(pieces_.begin(), pieces_.end(), x,
                                   [](const Rat& v, const Piece& p) { return v < p.first; });
        if (it == pieces_.begin()) return false;
        return x < std::prev(it)->second;
    }

    friend bool operator==(const IntervalEvent& a, const IntervalEvent& b) = default;

    // Boolean operations by sweeping the merged breakpoint list; results are
    // canonical by construction.
    friend IntervalEvent unite(const IntervalEvent& a, const IntervalEvent& b) {
        return sweep(a, b, [](bool x, bool y) { return x || y; });
    }
    friend IntervalEvent intersect(const IntervalEvent& a, const IntervalEvent& b) {
        return sweep(a, b, [](bool x, bool y) { return x && y; });
    }
    friend IntervalEvent subtract(const IntervalEvent& a, const IntervalEvent& b) {
        return sweep(a, b, [](bool x, bool y) { return x && !y; });
    }
    friend IntervalEvent symdiff(const IntervalEvent& a, const IntervalEvent& b) {
        return sweep(a, b, [](bool x, bool y) { return x != y; });
    }
    friend IntervalEvent complement(const IntervalEvent& a) {
        return sweep(a, IntervalEvent(), [](bool x, bool) { return !x; });
    }

    std::strong_ordering order(const IntervalEvent& o) const {
        std::size_t n = std::min(pieces_.size(), o.pieces_.size());
        for (std::size_t i = 0; i < n; ++i) {
            if (pieces_[i].first != o.pieces_[i].first)
                return pieces_[i].first < o.pieces_[i].first ? std::strong_ordering::less
                                                             : std::strong_ordering::greater;
            if (pieces_[i].second != o.pieces_[i].second)
                return pieces_[i].second < o.pieces_[i].second ? std::strong_ordering::less
                                                               : std::strong_ordering::greater;
        }
        return pieces_.size() <=> o.pieces_.size();
    }

private:
    template <class Op>
    static IntervalEvent sweep(const IntervalEvent& a, const IntervalEvent& b, Op op) {
        std::vector<Rat> cuts{Rat(0), Rat(1)};
        for (const auto& [lo, hi] : a.pieces_) { cuts.push_back(lo); cuts.push_back(hi); }
        for (const auto& [lo, hi] : b.pieces_) { cuts.push_back(lo); cuts.push_back(hi); }
        std::sort(cuts.begin(), cuts.end());
        cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
        std::vector<Piece> raw;
        for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
            if (op(a.contains(cuts[i]), b.contains(cuts[i])))
                raw.emplace_back(cuts[i], cuts[i + 1]);
        }
        return from_raw(std::move(raw));
    }

    std::vector<Piece> pieces_;
};

inline Rat rho(const IntervalEvent& a, const IntervalEvent& b) {
    return symdiff(a, b).measure();
}

inline bool subset(const IntervalEvent& a, const IntervalEvent& b) {
    return subtract(a, b).is_empty();
}

} // namespace ergo

#endif
