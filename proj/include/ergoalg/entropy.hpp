#ifndef ERGOALG_ENTROPY_HPP
#define ERGOALG_ENTROPY_HPP

#include <cmath>
#include <utility>
#include <vector>

#include "conditioning.hpp"

namespace ergo {

// All probabilities entering an entropy stay exact rationals end to end;
// floating point appears only in the final x ln x evaluation (long double
// accumulation, reported as double).
struct EntropyValue {
    double value = 0.0;
    std::vector<Rat> exact_probs; // joint cell probabilities the value came from
    std::vector<Rat> given_probs; // matching conditioning-cell probabilities

    std::size_t cell_count() const { return exact_probs.size(); }
};

struct System {
    Carrier carrier;
    Transformation tau;

    static System make(Transformation t) {
        System s{t.carrier(), std::move(t)};
        return s;
    }
};

// H(A/C) = -sum_i int P(A_i|C) ln P(A_i|C) dP, evaluated from the exact
// joint probabilities m(A_i n c); 0 ln 0 = 0 so H(A/A) = 0 exactly.
inline EntropyValue entropy(const FiniteAlgebra& A, const FiniteAlgebra& C) {
    if (!(A.carrier() == C.carrier())) throw carrier_mismatch("entropy carrier mismatch");
    EntropyValue out;
    long double sum = 0.0L;
    for (const auto& c : C.atoms()) {
        Rat mc = c.measure();
        for (const auto& a : A.atoms()) {
            Rat joint = intersect(a, c).measure();
            if (joint == 0) continue;
            out.exact_probs.push_back(joint);
            out.given_probs.push_back(mc);
            if (joint == mc) continue; // conditional probability 1 contributes 0
            long double x = joint.convert_to<long double>();
            long double g = mc.convert_to<long double>();
            sum += x * (std::log(g) - std::log(x));
        }
    }
    out.value = static_cast<double>(sum);
    if (out.value < 0 && out.value > -1e-15) out.value = 0.0;
    return out;
}

inline EntropyValue entropy(const FiniteAlgebra& A) {
    return entropy(A, FiniteAlgebra::trivial(A.carrier()));
}

// Joined pullbacks: join of tau^{-i}(A) for i in [from, to].
inline FiniteAlgebra pullback_join(const System& S, const FiniteAlgebra& A, long from, long to,
                                   const Config& cfg = Config::defaults()) {
    std::vector<Event> gens;
    for (long i = from; i <= to; ++i)
        for (const auto& a : A.atoms()) gens.push_back(iterate_image(S.tau, -i, a, cfg));
    return generated_algebra(gens, A.carrier());
}

struct HSequence {
    std::vector<EntropyValue> cesaro;      // (1/k) H(join_{i<k} tau^{-i} A), k = 1..n
    std::vector<EntropyValue> conditional; // H(A / join_{i=1..k} tau^{-i} A), k = 1..n
};

inline HSequence h_sequence(const System& S, const FiniteAlgebra& A, long n,
                            const Config& cfg = Config::defaults()) {
    if (n < 1) throw domain_error("h_sequence needs n >= 1");
    HSequence out;
    FiniteAlgebra joined = A;                                  // join_{i<k} tau^{-i} A
    FiniteAlgebra past = FiniteAlgebra::trivial(A.carrier()); // join_{i=1..k} tau^{-i} A
    for (long k = 1; k <= n; ++k) {
        if (k > 1) joined = join(joined, pullback_join(S, A, k - 1, k - 1, cfg));
        past = join(past, pullback_join(S, A, k, k, cfg));
        EntropyValue ces = entropy(joined);
        ces.value /= static_cast<double>(k);
        out.cesaro.push_back(std::move(ces));
        out.conditional.push_back(entropy(A, past));
    }
    return out;
}

// Exact independence of A from its k-step past for every k <= n (product
// formula on all cells, rational equality).
inline bool is_transformally_independent_upto(const System& S, const FiniteAlgebra& A, long n,
                                              const Config& cfg = Config::defaults()) {
    if (n < 1) throw domain_error("needs n >= 1");
    FiniteAlgebra past = FiniteAlgebra::trivial(A.carrier());
    for (long k = 1; k <= n; ++k) {
        past = join(past, pullback_join(S, A, k, k, cfg));
        for (const auto& a : A.atoms())
            for (const auto& p : past.atoms())
                if (intersect(a, p).measure() != a.measure() * p.measure()) return false;
    }
    return true;
}

struct DefinabilityResult {
    bool definable = false;
    bool exact_path = false; // true when decided by exact dcl membership
    double conditional_entropy = 0.0;
};

// A in dcl(tau^{-i} A : 1 <= i <= m), exactly when tol = 0 (every atom of A
// a union of past atoms); otherwise the numeric test H(A/past_m) <= tol.
inline DefinabilityResult is_transformally_definable_upto(const System& S, const FiniteAlgebra& A,
                                                          long m, double tol,
                                                          const Config& cfg = Config::defaults()) {
    if (m < 1) throw domain_error("needs m >= 1");
    if (tol < 0) throw domain_error("tolerance must be >= 0");
    FiniteAlgebra past = pullback_join(S, A, 1, m, cfg);
    DefinabilityResult r;
    if (tol == 0.0) {
        r.exact_path = true;
        r.definable = past.refines(A);
        r.conditional_entropy = entropy(A, past).value;
        return r;
    }
    r.exact_path = false;
    r.conditional_entropy = entropy(A, past).value;
    r.definable = r.conditional_entropy <= tol;
    return r;
}

} // namespace ergo

#endif
