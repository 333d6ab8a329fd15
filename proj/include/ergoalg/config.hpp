#ifndef ERGOALG_CONFIG_HPP
#define ERGOALG_CONFIG_HPP

#include <cstdlib>
#include <string>

namespace ergo {

// Budgets for the certified refinement loops. Symbolic trees deeper than
// `symbolic_depth` nodes are rejected; enclosure refinement stops (with a
// budget_error) once expansion depth exceeds `refine_depth`; automaton
// constructions cap their node counts at `node_budget`.
struct Config {
    int symbolic_depth = 64;
    int refine_depth = 64;
    long node_budget = 4'000'000;

    static Config defaults() {
        Config c;
        if (const char* env = std::getenv("ERGOALG_DEPTH_BUDGET")) {
            try {
                int d = std::stoi(env);
                if (d > 0) {
                    c.symbolic_depth = d;
                    c.refine_depth = d;
                }
            } catch (...) {
                // ignore malformed env override
            }
        }
        return c;
    }
};

} // namespace ergo

#endif
