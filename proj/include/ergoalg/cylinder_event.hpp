#ifndef ERGOALG_CYLINDER_EVENT_HPP
#define ERGOALG_CYLINDER_EVENT_HPP

#include <algorithm>
#include <compare>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "rational.hpp"

namespace ergo {

// Parameters of a Bernoulli product space: i.i.d. coordinates over
// {0,...,s-1} with rational symbol probabilities summing to 1.
struct BernoulliCarrier {
    int alphabet = 2;
    std::vector<Rat> probs;

    static BernoulliCarrier make(std::vector<Rat> p) {
        if (p.size() < 2) throw domain_error("Bernoulli alphabet must have >= 2 symbols");
        Rat total = 0;
        for (const auto& q : p) {
            if (q <= 0) throw domain_error("Bernoulli symbol probabilities must be positive");
            total += q;
        }
        if (total != 1) throw domain_error("Bernoulli probabilities must sum to 1");
        BernoulliCarrier c;
        c.alphabet = static_cast<int>(p.size());
        c.probs = std::move(p);
        return c;
    }

    friend bool operator==(const BernoulliCarrier&, const BernoulliCarrier&) = default;
};

// A finite union of cylinder sets over a common coordinate window
// [lo, lo+len). Semantically this is a set of words of length `len`; it is
// stored as the minimal layered DAG (acyclic DFA) accepting that word set,
// because the constructions in the towers module produce word sets far too
// large to enumerate. Canonical form: per-layer hash-consed minimal DAG plus
// a minimal window (boundary coordinates over which the word set is a full
// alphabet product are trimmed). Structural equality of canonical forms is
// equality of measure classes.
class CylinderEvent {
public:
    static constexpr std::int32_t REJECT = -1;
    // Children index into the next layer; the node at virtual layer `len`
    // is the accepting terminal (id 0 by convention).
    using Node = std::vector<std::int32_t>;

    CylinderEvent() = default;

    static CylinderEvent empty(const BernoulliCarrier& c) {
        CylinderEvent e;
        e.carrier_ = c;
        e.root_ = REJECT;
        return e;
    }

    static CylinderEvent full(const BernoulliCarrier& c) {
        CylinderEvent e;
        e.carrier_ = c;
        e.root_ = 0; // zero-length window
        return e;
    }

    // Explicit word-set constructor (the JSON/interface form).
    static CylinderEvent from_words(const BernoulliCarrier& c, long window_lo,
                                    std::vector<std::vector<int>> words) {
        std::size_t len = words.empty() ? 0 : words[0].size();
        for (const auto& w : words) {
            if (w.size() != len) throw domain_error("cylinder word length mismatch");
            for (int sym : w)
                if (sym < 0 || sym >= c.alphabet) throw domain_error("cylinder symbol out of range");
        }
        if (words.empty()) return empty(c);
        if (len == 0) return full(c);
        std::sort(words.begin(), words.end());
        words.erase(std::unique(words.begin(), words.end()), words.end());
        Builder b(c.alphabet, len);
        std::function<std::int32_t(std::size_t, std::size_t, std::size_t)> build =
            [&](std::size_t layer, std::size_t first, std::size_t last) -> std::int32_t {
            if (layer == len) return 0;
            Node node(c.alphabet, REJECT);
            std::size_t i = first;
            while (i < last) {
                int sym = words[i][layer];
                std::size_t j = i;
                while (j < last && words[j][layer] == sym) ++j;
                node[sym] = build(layer + 1, i, j);
                i = j;
            }
            return b.intern(layer, std::move(node));
        };
        std::int32_t root = build(0, 0, words.size());
        return finish(c, window_lo, std::move(b.layers), root);
    }

    static CylinderEvent word_at(const BernoulliCarrier& c, long pos, const std::vector<int>& w) {
        return from_words(c, pos, {w});
    }

    const BernoulliCarrier& carrier() const { return carrier_; }
    long window_lo() const { return lo_; }
    long window_len() const { return static_cast<long>(layers_.size()); }
    bool is_empty() const { return root_ == REJECT; }
    bool is_full() const { return root_ != REJECT && layers_.empty(); }
    long node_count() const {
        long n = 0;
        for (const auto& l : layers_) n += static_cast<long>(l.size());
        return n;
    }
    const std::vector<std::vector<Node>>& layers() const { return layers_; }
    std::int32_t root() const { return root_; }

    // Exact product measure, as an integer DP with implicit denominator
    // D^depth (D = common denominator of the symbol probabilities).
    Rat measure() const {
        if (root_ == REJECT) return Rat(0);
        if (layers_.empty()) return Rat(1);
        Int d = 1;
        for (const auto& p : carrier_.probs) d = boost::multiprecision::lcm(d, rat_den(p));
        std::vector<Int> weight(carrier_.probs.size());
        for (std::size_t s = 0; s < weight.size(); ++s)
            weight[s] = rat_num(carrier_.probs[s]) * (d / rat_den(carrier_.probs[s]));
        std::vector<Int> next{Int(1)}, cur;
        for (std::size_t layer = layers_.size(); layer-- > 0;) {
            cur.assign(layers_[layer].size(), Int(0));
            for (std::size_t i = 0; i < layers_[layer].size(); ++i) {
                const Node& n = layers_[layer][i];
                for (int s = 0; s < carrier_.alphabet; ++s)
                    if (n[s] != REJECT) cur[i] += weight[s] * next[n[s]];
            }
            std::swap(cur, next);
        }
        Int den = 1;
        for (std::size_t i = 0; i < layers_.size(); ++i) den *= d;
        return Rat(next[root_], den);
    }

    Int word_count() const {
        if (root_ == REJECT) return 0;
        std::vector<Int> next{Int(1)}, cur;
        for (std::size_t layer = layers_.size(); layer-- > 0;) {
            cur.assign(layers_[layer].size(), Int(0));
            for (std::size_t i = 0; i < layers_[layer].size(); ++i)
                for (std::int32_t ch : layers_[layer][i])
                    if (ch != REJECT) cur[i] += next[ch];
            std::swap(cur, next);
        }
        return next[root_];
    }

    // Enumerates words in ascending order up to `cap`; false if more exist.
    bool list_words(std::vector<std::vector<int>>& out, std::size_t cap) const {
        out.clear();
        if (root_ == REJECT) return true;
        std::vector<int> w(layers_.size());
        bool ok = true;
        std::function<void(std::size_t, std::int32_t)> dfs = [&](std::size_t layer, std::int32_t id) {
            if (!ok) return;
            if (layer == layers_.size()) {
                if (out.size() >= cap) { ok = false; return; }
                out.push_back(w);
                return;
            }
            const Node& n = layers_[layer][id];
            for (int s = 0; s < carrier_.alphabet && ok; ++s) {
                if (n[s] == REJECT) continue;
                w[layer] = s;
                dfs(layer + 1, n[s]);
            }
        };
        dfs(0, root_);
        return ok;
    }

    // The coordinate shift: forward moves occurrences right, so the image
    // of [x_0=s] is [x_1=s]. Exactly measure preserving.
    CylinderEvent shifted(long k) const {
        if (root_ == REJECT || layers_.empty()) return *this;
        CylinderEvent e = *this;
        e.lo_ += k;
        return e;
    }

    friend bool operator==(const CylinderEvent& a, const CylinderEvent& b) {
        if (a.carrier_ != b.carrier_) return false;
        if (a.root_ == REJECT || b.root_ == REJECT) return a.root_ == b.root_;
        return a.lo_ == b.lo_ && a.root_ == b.root_ && a.layers_ == b.layers_;
    }

    friend CylinderEvent unite(const CylinderEvent& a, const CylinderEvent& b) {
        return combine(a, b, [](bool x, bool y) { return x || y; });
    }
    friend CylinderEvent intersect(const CylinderEvent& a, const CylinderEvent& b) {
        return combine(a, b, [](bool x, bool y) { return x && y; });
    }
    friend CylinderEvent subtract(const CylinderEvent& a, const CylinderEvent& b) {
        return combine(a, b, [](bool x, bool y) { return x && !y; });
    }
    friend CylinderEvent symdiff(const CylinderEvent& a, const CylinderEvent& b) {
        return combine(a, b, [](bool x, bool y) { return x != y; });
    }
    friend CylinderEvent complement(const CylinderEvent& a) {
        return combine(a, empty(a.carrier_), [](bool x, bool) { return !x; });
    }

    std::strong_ordering order(const CylinderEvent& o) const {
        int x = root_ == REJECT ? 0 : 1, y = o.root_ == REJECT ? 0 : 1;
        if (x != y) return x <=> y;
        if (root_ == REJECT) return std::strong_ordering::equal;
        if (lo_ != o.lo_) return lo_ <=> o.lo_;
        if (layers_.size() != o.layers_.size()) return layers_.size() <=> o.layers_.size();
        if (layers_ != o.layers_)
            return layers_ < o.layers_ ? std::strong_ordering::less : std::strong_ordering::greater;
        return root_ <=> o.root_;
    }

    // Constructs an event from a deterministic scanner reading the window
    // left to right. `step(state, layer, symbol)` returns (alive, next);
    // dead transitions reject; `layer` is the 0-based index into the window.
    // Used by the towers module to build marker automata directly.
    struct Scanner {
        long window_lo = 0;
        long window_len = 0;
        std::uint64_t init = 0;
        std::function<std::pair<bool, std::uint64_t>(std::uint64_t, long, int)> step;
        std::function<bool(std::uint64_t)> accept;
    };

    static CylinderEvent from_scanner(const BernoulliCarrier& c, const Scanner& sc) {
        long n = sc.window_len;
        if (n == 0) return sc.accept(sc.init) ? full(c) : empty(c);
        std::vector<std::vector<std::uint64_t>> states(n + 1);
        std::vector<std::unordered_map<std::uint64_t, std::int32_t>> index(n + 1);
        states[0].push_back(sc.init);
        index[0][sc.init] = 0;
        for (long l = 0; l < n; ++l) {
            for (std::uint64_t st : states[l]) {
                for (int s = 0; s < c.alphabet; ++s) {
                    auto [alive, nx] = sc.step(st, l, s);
                    if (!alive) continue;
                    if (!index[l + 1].count(nx)) {
                        index[l + 1][nx] = static_cast<std::int32_t>(states[l + 1].size());
                        states[l + 1].push_back(nx);
                    }
                }
            }
        }
        Builder b(c.alphabet, static_cast<std::size_t>(n));
        std::vector<std::int32_t> next_ids(states[n].size()), cur_ids;
        for (std::size_t i = 0; i < states[n].size(); ++i)
            next_ids[i] = sc.accept(states[n][i]) ? 0 : REJECT;
        for (long l = n - 1; l >= 0; --l) {
            cur_ids.assign(states[l].size(), REJECT);
            for (std::size_t i = 0; i < states[l].size(); ++i) {
                Node node(c.alphabet, REJECT);
                for (int s = 0; s < c.alphabet; ++s) {
                    auto [alive, nx] = sc.step(states[l][i], l, s);
                    if (alive) node[s] = next_ids[index[l + 1].at(nx)];
                }
                cur_ids[i] = b.intern(static_cast<std::size_t>(l), std::move(node));
            }
            std::swap(cur_ids, next_ids);
        }
        return finish(c, sc.window_lo, std::move(b.layers), next_ids[0]);
    }

private:
    struct Builder {
        Builder(int alphabet, std::size_t len) : alphabet(alphabet), layers(len), seen(len) {}
        int alphabet;
        std::vector<std::vector<Node>> layers;
        std::vector<std::map<Node, std::int32_t>> seen;

        // All-reject nodes collapse to REJECT; duplicates merge.
        std::int32_t intern(std::size_t layer, Node node) {
            bool any = false;
            for (std::int32_t c : node) any = any || c != REJECT;
            if (!any) return REJECT;
            auto it = seen[layer].find(node);
            if (it != seen[layer].end()) return it->second;
            std::int32_t id = static_cast<std::int32_t>(layers[layer].size());
            layers[layer].push_back(node);
            seen[layer].emplace(std::move(node), id);
            return id;
        }
    };

    // Bottom-up re-intern: keeps only nodes reachable from the root and
    // merges equivalent ones, yielding the minimal layered DAG.
    void recanon() {
        if (root_ == REJECT || layers_.empty()) return;
        std::size_t len = layers_.size();
        std::vector<std::vector<Node>> out(len);
        std::vector<std::map<Node, std::int32_t>> dedup(len);
        std::vector<std::unordered_map<std::int32_t, std::int32_t>> memo(len);
        std::function<std::int32_t(std::size_t, std::int32_t)> re =
            [&](std::size_t layer, std::int32_t id) -> std::int32_t {
            if (id == REJECT) return REJECT;
            if (layer == len) return 0;
            auto it = memo[layer].find(id);
            if (it != memo[layer].end()) return it->second;
            Node n = layers_[layer][id];
            bool any = false;
            for (auto& ch : n) {
                ch = re(layer + 1, ch);
                any = any || ch != REJECT;
            }
            std::int32_t nid = REJECT;
            if (any) {
                auto f = dedup[layer].find(n);
                if (f != dedup[layer].end()) {
                    nid = f->second;
                } else {
                    nid = static_cast<std::int32_t>(out[layer].size());
                    out[layer].push_back(n);
                    dedup[layer].emplace(std::move(n), nid);
                }
            }
            memo[layer].emplace(id, nid);
            return nid;
        };
        root_ = re(0, root_);
        layers_ = std::move(out);
        if (root_ == REJECT) {
            layers_.clear();
            lo_ = 0;
        }
    }

    // Window minimization. A boundary coordinate is dropped when the word
    // set is a full alphabet product over it.
    void trim() {
        if (root_ == REJECT) { layers_.clear(); lo_ = 0; return; }
        for (;;) {
            if (layers_.empty()) break;
            bool drop = true;
            for (const Node& n : layers_.back()) {
                for (std::int32_t c : n)
                    if (c != 0) { drop = false; break; }
                if (!drop) break;
            }
            if (!drop) break;
            layers_.pop_back();
            if (!layers_.empty())
                for (Node& n : layers_.back())
                    for (std::int32_t& c : n)
                        if (c != REJECT) c = 0;
            recanon();
        }
        while (!layers_.empty()) {
            const Node& r = layers_.front()[root_];
            std::int32_t first = r[0];
            bool same = first != REJECT;
            for (std::int32_t c : r) same = same && c == first;
            if (!same) break;
            layers_.erase(layers_.begin());
            root_ = first;
            ++lo_;
        }
        if (layers_.empty()) {
            root_ = 0;
            lo_ = 0;
        }
    }

    static CylinderEvent finish(const BernoulliCarrier& c, long lo,
                                std::vector<std::vector<Node>> layers, std::int32_t root) {
        CylinderEvent e;
        e.carrier_ = c;
        if (root == REJECT) { e.root_ = REJECT; return e; }
        e.lo_ = lo;
        e.layers_ = std::move(layers);
        e.root_ = root;
        e.recanon();
        e.trim();
        return e;
    }

    // Binary boolean combine via product construction over aligned windows.
    // Handles are REJECT, FULL (accept-everything, used outside an event's
    // window), or a node id in the event's layer at the current coordinate.
    template <class Op>
    static CylinderEvent combine(const CylinderEvent& a, const CylinderEvent& b, Op op) {
        if (a.carrier_ != b.carrier_) throw carrier_mismatch("cylinder carrier mismatch");
        constexpr std::int32_t FULL = -2;
        long lo = 0, hi = 0;
        if (a.root_ != REJECT && b.root_ != REJECT) {
            lo = std::min(a.lo_, b.lo_);
            hi = std::max(a.lo_ + a.window_len(), b.lo_ + b.window_len());
        } else if (a.root_ != REJECT) {
            lo = a.lo_;
            hi = a.lo_ + a.window_len();
        } else if (b.root_ != REJECT) {
            lo = b.lo_;
            hi = b.lo_ + b.window_len();
        }
        long len = hi - lo;
        Builder bl(a.carrier_.alphabet, static_cast<std::size_t>(len));
        std::vector<std::unordered_map<std::uint64_t, std::int32_t>> memo(len + 1);
        auto key = [](std::int32_t x, std::int32_t y) {
            return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(x)) << 32) |
                   static_cast<std::uint32_t>(y);
        };
        auto child = [&](const CylinderEvent& e, long gl, std::int32_t id, int sym) -> std::int32_t {
            if (id == REJECT || id == FULL) return id;
            long rel = gl - (e.lo_ - lo);
            if (rel < 0 || rel >= e.window_len()) return id;
            std::int32_t c = e.layers_[rel][id][sym];
            if (rel + 1 == e.window_len() && c == 0) return FULL;
            return c;
        };
        auto accepted = [](std::int32_t h) { return h != REJECT; };
        std::function<std::int32_t(long, std::int32_t, std::int32_t)> build =
            [&](long gl, std::int32_t x, std::int32_t y) -> std::int32_t {
            if (gl == len) return op(accepted(x), accepted(y)) ? 0 : REJECT;
            auto it = memo[gl].find(key(x, y));
            if (it != memo[gl].end()) return it->second;
            Node n(a.carrier_.alphabet, REJECT);
            for (int s = 0; s < a.carrier_.alphabet; ++s)
                n[s] = build(gl + 1, child(a, gl, x, s), child(b, gl, y, s));
            std::int32_t id = bl.intern(static_cast<std::size_t>(gl), std::move(n));
            memo[gl].emplace(key(x, y), id);
            return id;
        };
        auto handle = [&](const CylinderEvent& e) -> std::int32_t {
            if (e.root_ == REJECT) return REJECT;
            if (e.window_len() == 0) return FULL;
            return e.root_;
        };
        std::int32_t root = build(0, handle(a), handle(b));
        return finish(a.carrier_, lo, std::move(bl.layers), root);
    }

    BernoulliCarrier carrier_{2, {Rat(1, 2), Rat(1, 2)}};
    long lo_ = 0;
    std::vector<std::vector<Node>> layers_;
    std::int32_t root_ = REJECT;
};

inline Rat rho(const CylinderEvent& a, const CylinderEvent& b) {
    return symdiff(a, b).measure();
}

inline bool subset(const CylinderEvent& a, const CylinderEvent& b) {
    return subtract(a, b).is_empty();
}

} // namespace ergo

#endif
