#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "ctqw/errors.hpp"
#include "ctqw/hamiltonian.hpp"
#include "ctqw/lattice.hpp"
#include "ctqw/partition.hpp"

namespace ctqw {

// One stage of the multi-stage search: the two leading-order blocks, the
// classes dropped entirely, and bookkeeping for the analysis around it.
struct Stage {
    std::vector<int> block_a; // target side; holds the oracle class
    std::vector<int> block_b; // initial side
    std::vector<int> pruned;
    double hint_coeff = 0.0; // asymptotic gamma_c guess = hint_coeff * M^hint_power
    int hint_power = -1;
    bool closed_form = false; // final stage: 1x1 blocks -1 and -gamma*M
    int target = -1;          // class the stage should populate
    int initial = -1;         // class the stage starts from

    double gamma_hint(double m) const { return hint_coeff * std::pow(m, hint_power); }
};

struct StagePlan {
    std::vector<Stage> stages;

    const Stage& stage(int s) const {
        if (s < 0 || s >= static_cast<int>(stages.size()))
            throw InvalidStage("stage " + std::to_string(s) + " not in [0, " +
                               std::to_string(stages.size()) + ")");
        return stages[s];
    }
    int count() const { return static_cast<int>(stages.size()); }
};

enum class Scenario {
    single_mark_r1,
    single_mark_r2,
    single_mark_r3,
    marked_class_e_scheme1,
    marked_class_e_scheme2,
    marked_class_o,
    table5_a,
    table5_b,
    table5_c,
    table5_d,
    table5_e,
    fig11_three_marks,
};

inline const std::vector<std::pair<Scenario, std::string>>& scenario_names() {
    static const std::vector<std::pair<Scenario, std::string>> names = {
        {Scenario::single_mark_r1, "single_mark_r1"},
        {Scenario::single_mark_r2, "single_mark_r2"},
        {Scenario::single_mark_r3, "single_mark_r3"},
        {Scenario::marked_class_e_scheme1, "marked_class_e_scheme1"},
        {Scenario::marked_class_e_scheme2, "marked_class_e_scheme2"},
        {Scenario::marked_class_o, "marked_class_o"},
        {Scenario::table5_a, "table5_a"},
        {Scenario::table5_b, "table5_b"},
        {Scenario::table5_c, "table5_c"},
        {Scenario::table5_d, "table5_d"},
        {Scenario::table5_e, "table5_e"},
        {Scenario::fig11_three_marks, "fig11_three_marks"},
    };
    return names;
}

inline std::string to_string(Scenario s) {
    for (const auto& [sc, name] : scenario_names())
        if (sc == s) return name;
    throw UnknownScenario("unmapped scenario enum value");
}

inline Scenario scenario_from_string(const std::string& name) {
    for (const auto& [sc, n] : scenario_names())
        if (n == name) return sc;
    throw UnknownScenario("'" + name + "'");
}

inline int scenario_order(Scenario s) {
    switch (s) {
        case Scenario::single_mark_r1:
        case Scenario::fig11_three_marks: return 1;
        case Scenario::single_mark_r3:
        case Scenario::marked_class_o: return 3;
        default: return 2;
    }
}

// Mark positions with components counted from the top encoded as negatives
// (-1 == M-1). All choices below are canonical representatives; any
// equivalent placement yields an isomorphic reduction.
inline std::vector<std::vector<int>> scenario_mark_patterns(Scenario s) {
    switch (s) {
        case Scenario::single_mark_r1: return {{0, 0}};
        case Scenario::single_mark_r2: return {{0, 0, -1}};
        case Scenario::single_mark_r3: return {{0, 0, -1, -1}};
        // The class-state scenarios refine around the canonical single mark
        // and place the oracle on a whole class afterwards.
        case Scenario::marked_class_e_scheme1:
        case Scenario::marked_class_e_scheme2: return {{0, 0, -1}};
        case Scenario::marked_class_o: return {{0, 0, -1, -1}};
        // Two marks: one clique / one first-order subgraph / adjacent pair /
        // bridge pair / two separate subgraphs.
        case Scenario::table5_a: return {{0, 0, -1}, {0, 0, 0}};
        case Scenario::table5_b: return {{0, 0, -1}, {0, 1, 0}};
        case Scenario::table5_c: return {{0, 0, 0}, {0, 1, 0}};
        case Scenario::table5_d: return {{0, 0, -1}, {1, 0, 0}};
        case Scenario::table5_e: return {{0, 0, -1}, {2, 0, 1}};
        case Scenario::fig11_three_marks: return {{0, 2}, {0, 3}, {1, 4}};
    }
    throw UnknownScenario("unmapped scenario enum value");
}

inline std::vector<VertexAddress> materialize_marks(Scenario s, int m) {
    std::vector<VertexAddress> out;
    for (const auto& pattern : scenario_mark_patterns(s)) {
        VertexAddress a(pattern.size());
        for (std::size_t k = 0; k < pattern.size(); ++k) {
            const int base = (k == 0) ? m + 1 : m;
            a[k] = pattern[k] >= 0 ? pattern[k] : pattern[k] + base;
        }
        out.push_back(std::move(a));
    }
    return out;
}

namespace detail {

// Level of the one non-clique edge at a vertex (0 if r == 0).
inline int external_level(const Lattice& lat, VertexId v) {
    int lvl = 0;
    for (VertexId w : lat.neighbors(v))
        lvl = std::max(lvl, lat.separation_level(v, w));
    return lvl;
}

inline bool class_within(const Lattice& lat, const Partition& p, int c, int level,
                         const std::set<std::int64_t>& homes) {
    for (VertexId v : p.classes[c])
        if (!homes.count(lat.subgraph_id(v, level))) return false;
    return true;
}

inline std::vector<int> classes_within(const Lattice& lat, const Partition& p, int level,
                                       const std::set<std::int64_t>& homes) {
    std::vector<int> out;
    for (int c = 0; c < p.count(); ++c)
        if (class_within(lat, p, c, level, homes)) out.push_back(c);
    return out;
}

inline std::vector<int> complement_of(int count, const std::vector<int>& a,
                                      const std::vector<int>& b) {
    std::vector<char> used(count, 0);
    for (int c : a) used[c] = 1;
    for (int c : b) used[c] = 1;
    std::vector<int> out;
    for (int c = 0; c < count; ++c)
        if (!used[c]) out.push_back(c);
    return out;
}

inline int largest_class(const Partition& p, const std::vector<int>& among) {
    int best = -1;
    for (int c : among)
        if (best < 0 || p.sizes[c] > p.sizes[best]) best = c;
    return best;
}

// External neighbor (the unique non-cliquemate) of a vertex; r >= 1.
inline VertexId external_partner(const Lattice& lat, VertexId v) {
    for (VertexId w : lat.neighbors(v))
        if (lat.separation_level(v, w) > 0) return w;
    return lat.neighbors(v)[0];
}

} // namespace detail

// Reference labels a..v (skipping i and s) for the 20 classes of the
// second-order single-mark reduction, derived from structural roles so the
// assignment works at every dimension: a is the mark, f its outside partner,
// b/g their clique mates; the remaining letters follow the adjacency chain
// within the mark's subgraph, its partner's subgraph, and the bulk.
inline std::vector<int> second_order_letter_order(const Lattice& lat, const Partition& p) {
    if (lat.order() != 2 || p.count() != 20 || p.marked_classes.size() != 1)
        throw InvalidStage("letter labels need the 20-class second-order reduction");
    const auto b = neighbor_counts(lat, p);
    const int K = 20;

    auto adjacent = [&](int i, int j) { return b(i, j) > 0; };
    auto is_bridge_class = [&](int c) {
        return detail::external_level(lat, p.classes[c].front()) == 2;
    };

    const int a = p.marked_classes.front();
    const VertexId mark = p.classes[a].front();
    const VertexId partner = detail::external_partner(lat, mark);
    const int f = p.class_of[partner];

    auto the_neighbor = [&](int c, auto&& pred) {
        for (int j = 0; j < K; ++j)
            if (j != c && adjacent(c, j) && pred(j)) return j;
        throw NotEquitable("letter derivation: no neighbor matches for class " +
                           std::to_string(c));
    };

    const std::set<std::int64_t> homeA = {lat.subgraph_id(mark, 1)};
    const std::set<std::int64_t> homeB = {lat.subgraph_id(partner, 1)};
    auto inA = [&](int c) { return detail::class_within(lat, p, c, 1, homeA); };
    auto inB = [&](int c) { return detail::class_within(lat, p, c, 1, homeB); };

    const int bcls = the_neighbor(a, inA);
    const int g = the_neighbor(f, inB);

    auto find_class = [&](auto&& pred) {
        for (int c = 0; c < K; ++c)
            if (pred(c)) return c;
        throw NotEquitable("letter derivation: class not found");
    };

    const int c = find_class([&](int x) { return inA(x) && x != a && is_bridge_class(x); });
    const int h = find_class([&](int x) { return inB(x) && x != f && is_bridge_class(x); });

    // e/k are the bulk classes of the two subgraphs, d/j the leftovers.
    std::vector<int> inA_rest, inB_rest;
    for (int x = 0; x < K; ++x) {
        if (inA(x) && x != a && x != bcls && x != c) inA_rest.push_back(x);
        if (inB(x) && x != f && x != g && x != h) inB_rest.push_back(x);
    }
    if (inA_rest.size() != 2 || inB_rest.size() != 2)
        throw NotEquitable("letter derivation: unexpected subgraph class split");
    const int eA = p.sizes[inA_rest[0]] > p.sizes[inA_rest[1]] ? inA_rest[0] : inA_rest[1];
    const int d = inA_rest[0] == eA ? inA_rest[1] : inA_rest[0];
    const int kB = p.sizes[inB_rest[0]] > p.sizes[inB_rest[1]] ? inB_rest[0] : inB_rest[1];
    const int j = inB_rest[0] == kB ? inB_rest[1] : inB_rest[0];

    // Bulk side: l/o land the bridges out of the two special subgraphs,
    // r bridges bulk to bulk, the rest follows adjacency.
    auto inC = [&](int x) { return !inA(x) && !inB(x); };
    const int l = the_neighbor(c, inC);
    const int o = the_neighbor(h, inC);
    const int r = find_class([&](int x) { return inC(x) && is_bridge_class(x) && b(x, x) > 0; });
    const int n = the_neighbor(l, [&](int x) {
        return inC(x) && x != l && p.sizes[x] > p.sizes[l];
    });
    const int q = the_neighbor(o, [&](int x) {
        return inC(x) && x != o && p.sizes[x] > p.sizes[o];
    });
    const int mcls = the_neighbor(l, [&](int x) { return inC(x) && x != n && x != l; });
    const int pcls = the_neighbor(o, [&](int x) { return inC(x) && x != q && x != o; });
    const int t = the_neighbor(n, [&](int x) { return inC(x) && x != l && x != mcls && x != n; });
    const int u = the_neighbor(q, [&](int x) { return inC(x) && x != o && x != pcls && x != q; });
    const int v = find_class([&](int x) {
        return inC(x) && x != l && x != mcls && x != n && x != o && x != pcls && x != q &&
               x != r && x != t && x != u;
    });

    return {a, bcls, c, d, eA, f, g, h, j, kB, l, mcls, n, o, pcls, q, r, t, u, v};
}

inline const std::vector<std::string>& second_order_letters() {
    static const std::vector<std::string> L = {"a", "b", "c", "d", "e", "f", "g",
                                               "h", "j", "k", "l", "m", "n", "o",
                                               "p", "q", "r", "t", "u", "v"};
    return L;
}

// A scenario reduced to its invariant subspace at one concrete dimension.
struct ScenarioReduction {
    Scenario scenario;
    std::shared_ptr<Lattice> lattice;
    Partition partition;
    QuotientMatrix quotient;
    std::vector<int> oracle_classes; // classes the oracle projects onto
    std::vector<VertexId> marked_vertices;
    StagePlan plan;
    std::vector<std::string> labels;
};

// Everything the analysis and evolution operations need, detached from any
// concrete lattice so it can also be produced for dimensions far beyond what
// fits in memory.
struct ReducedSystem {
    int m = 0;
    std::vector<std::int64_t> sizes;
    QuotientMatrix q;
    std::vector<int> oracle_classes;
    StagePlan plan;
    std::vector<std::string> labels;

    int class_count() const { return static_cast<int>(sizes.size()); }

    OracleSpec oracle(OracleKind kind = OracleKind::vertex_sum) const {
        return OracleSpec::classes(oracle_classes, kind);
    }
};

inline ReducedSystem to_system(const ScenarioReduction& red) {
    ReducedSystem sys;
    sys.m = red.lattice->dim();
    sys.sizes = red.partition.sizes;
    sys.q = red.quotient;
    sys.oracle_classes = red.oracle_classes;
    sys.plan = red.plan;
    sys.labels = red.labels;
    return sys;
}

namespace detail {

inline StagePlan plan_single_mark(const Lattice& lat, const Partition& p, VertexId mark) {
    const int r = lat.order();
    StagePlan plan;
    const VertexId partner = external_partner(lat, mark);

    for (int s = 1; s <= r; ++s) {
        const int level = r - s;
        Stage st;
        st.block_a = classes_within(lat, p, level, {lat.subgraph_id(mark, level)});
        if (s == 1) {
            st.pruned = classes_within(lat, p, r - 1, {lat.subgraph_id(partner, r - 1)});
            st.block_b = complement_of(p.count(), st.block_a, st.pruned);
        } else {
            auto prev = classes_within(lat, p, level + 1, {lat.subgraph_id(mark, level + 1)});
            std::vector<char> in_a(p.count(), 0);
            for (int c : st.block_a) in_a[c] = 1;
            for (int c : prev)
                if (!in_a[c]) st.block_b.push_back(c);
            st.pruned = complement_of(p.count(), st.block_a, st.block_b);
        }
        st.hint_coeff = r + 2 - s;
        st.hint_power = -1;
        st.target = largest_class(p, st.block_a);
        st.initial = largest_class(p, st.block_b);
        plan.stages.push_back(std::move(st));
    }

    // Final stage: the mark against its clique mates, in the closed form
    // whose crossing sits at exactly 1/M.
    Stage last;
    const int a = p.class_of[mark];
    int bcls = -1;
    for (VertexId w : lat.neighbors(mark))
        if (lat.separation_level(mark, w) == 0) {
            bcls = p.class_of[w];
            break;
        }
    if (r == 0) bcls = p.class_of[lat.neighbors(mark)[0]];
    last.block_a = {a};
    last.block_b = {bcls};
    last.pruned = complement_of(p.count(), last.block_a, last.block_b);
    last.hint_coeff = 1;
    last.hint_power = -1;
    last.closed_form = true;
    last.target = a;
    last.initial = bcls;
    plan.stages.push_back(std::move(last));
    return plan;
}

inline std::vector<int> letters_to_classes(const std::vector<int>& order,
                                           const std::string& which) {
    const auto& names = second_order_letters();
    std::vector<int> out;
    std::size_t pos = 0;
    while (pos < which.size()) {
        auto comma = which.find(',', pos);
        if (comma == std::string::npos) comma = which.size();
        const std::string letter = which.substr(pos, comma - pos);
        auto it = std::find(names.begin(), names.end(), letter);
        if (it == names.end()) throw InvalidStage("unknown letter '" + letter + "'");
        out.push_back(order[it - names.begin()]);
        pos = comma + 1;
    }
    std::sort(out.begin(), out.end());
    return out;
}

inline StagePlan plan_marked_class_e(const std::vector<int>& letter_order, int scheme,
                                     int class_count) {
    Stage st;
    if (scheme == 1) {
        st.block_a = letters_to_classes(letter_order, "a,b,c,d,e");
        st.block_b = letters_to_classes(letter_order, "l,m,n,o,p,q,r,t,u,v");
    } else {
        st.block_a = letters_to_classes(letter_order, "c,d,e");
        st.block_b = letters_to_classes(letter_order, "l,m,n,r,t,u,v");
    }
    st.pruned = complement_of(class_count, st.block_a, st.block_b);
    st.hint_coeff = 1;
    st.hint_power = 1;
    st.target = letters_to_classes(letter_order, "e").front();
    st.initial = letters_to_classes(letter_order, "v").front();
    StagePlan plan;
    plan.stages.push_back(std::move(st));
    return plan;
}

inline StagePlan plan_marked_class_o(const Lattice& lat, const Partition& p, VertexId mark,
                                     int oracle_class) {
    const int r = lat.order();
    const VertexId partner = external_partner(lat, mark);
    Stage st;
    st.block_a = classes_within(lat, p, r - 1, {lat.subgraph_id(mark, r - 1)});
    st.pruned = classes_within(lat, p, r - 1, {lat.subgraph_id(partner, r - 1)});
    st.block_b = complement_of(p.count(), st.block_a, st.pruned);
    st.hint_coeff = 1;
    st.hint_power = 2;
    st.target = oracle_class;
    st.initial = largest_class(p, st.block_b);
    StagePlan plan;
    plan.stages.push_back(std::move(st));
    return plan;
}

inline StagePlan plan_two_marks(const Lattice& lat, const Partition& p,
                                const std::vector<VertexId>& marks,
                                const std::vector<int>& gamma_ladder) {
    const int r = lat.order(); // == 2
    StagePlan plan;

    std::set<std::int64_t> homes, b_subgraphs, cliques;
    for (VertexId mk : marks) {
        homes.insert(lat.subgraph_id(mk, r - 1));
        cliques.insert(lat.subgraph_id(mk, 0));
    }
    for (VertexId mk : marks) {
        const VertexId partner = external_partner(lat, mk);
        const std::int64_t sub = lat.subgraph_id(partner, r - 1);
        if (!homes.count(sub)) b_subgraphs.insert(sub);
    }

    Stage s1;
    s1.block_a = classes_within(lat, p, r - 1, homes);
    s1.pruned = b_subgraphs.empty()
                    ? std::vector<int>{}
                    : classes_within(lat, p, r - 1, b_subgraphs);
    s1.block_b = complement_of(p.count(), s1.block_a, s1.pruned);
    s1.target = largest_class(p, s1.block_a);
    s1.initial = largest_class(p, s1.block_b);

    Stage s2;
    s2.block_a = classes_within(lat, p, 0, cliques);
    {
        auto within_home = classes_within(lat, p, r - 1, homes);
        std::vector<char> in_a(p.count(), 0);
        for (int c : s2.block_a) in_a[c] = 1;
        for (int c : within_home)
            if (!in_a[c]) s2.block_b.push_back(c);
    }
    s2.pruned = complement_of(p.count(), s2.block_a, s2.block_b);
    s2.target = largest_class(p, s2.block_a);
    s2.initial = largest_class(p, s2.block_b);

    Stage s3;
    s3.block_a = p.marked_classes;
    for (int c = 0; c < p.count(); ++c) {
        if (p.is_marked(c)) continue;
        if (class_within(lat, p, c, 0, cliques)) s3.block_b.push_back(c);
    }
    s3.pruned = complement_of(p.count(), s3.block_a, s3.block_b);
    s3.target = largest_class(p, s3.block_a);
    s3.initial = largest_class(p, s3.block_b);

    plan.stages = {std::move(s1), std::move(s2), std::move(s3)};
    for (int s = 0; s < 3; ++s) {
        plan.stages[s].hint_coeff = gamma_ladder[s];
        plan.stages[s].hint_power = -1;
    }
    return plan;
}

// First-order lattice, marks {a, b} in one clique and {d} in another: two
// alternative first-stage analyses, one pulling toward {a, b}, one toward d.
inline StagePlan plan_three_marks(const Lattice& lat, const Partition& p,
                                  const std::vector<VertexId>& marks) {
    std::set<std::int64_t> ab_home = {lat.subgraph_id(marks[0], 0)};
    std::set<std::int64_t> d_home = {lat.subgraph_id(marks[2], 0)};
    std::set<std::int64_t> special; // recipients of marked external edges
    for (VertexId mk : marks)
        special.insert(lat.subgraph_id(external_partner(lat, mk), 0));

    auto make = [&](const std::set<std::int64_t>& target_home,
                    const std::set<std::int64_t>& other_home, int coeff) {
        Stage st;
        st.block_a = classes_within(lat, p, 0, target_home);
        std::set<std::int64_t> drop = special;
        for (auto s : other_home) drop.insert(s);
        for (auto s : target_home) drop.erase(s);
        st.pruned = classes_within(lat, p, 0, drop);
        st.block_b = complement_of(p.count(), st.block_a, st.pruned);
        st.hint_coeff = coeff;
        st.hint_power = -1;
        st.target = largest_class(p, st.block_a);
        st.initial = largest_class(p, st.block_b);
        return st;
    };

    StagePlan plan;
    plan.stages.push_back(make(ab_home, d_home, 3));
    plan.stages.push_back(make(d_home, ab_home, 2));
    return plan;
}

} // namespace detail

inline ScenarioReduction reduce_scenario(Scenario s, int m) {
    const int r = scenario_order(s);
    auto lattice = std::make_shared<Lattice>(LatticeSpec{r, m});
    std::vector<VertexId> refine_marks;
    for (const auto& a : materialize_marks(s, m)) refine_marks.push_back(lattice->id_of(a));

    ScenarioReduction red;
    red.scenario = s;
    red.lattice = lattice;
    red.partition = refine(*lattice, refine_marks);
    red.marked_vertices = refine_marks;

    Partition& p = red.partition;
    const VertexId mark0 = refine_marks.front();

    // Letter labels apply to the 20-class single-mark structure; derive them
    // before any scenario-specific reinterpretation of the marked classes.
    red.labels.resize(p.count());
    for (int c = 0; c < p.count(); ++c) red.labels[c] = "c" + std::to_string(c);
    std::vector<int> letters;
    if (r == 2 && p.count() == 20 && p.marked_classes.size() == 1) {
        letters = second_order_letter_order(*lattice, p);
        for (int i = 0; i < 20; ++i) red.labels[letters[i]] = second_order_letters()[i];
    }

    switch (s) {
        case Scenario::single_mark_r1:
        case Scenario::single_mark_r2:
        case Scenario::single_mark_r3:
            red.oracle_classes = p.marked_classes;
            red.plan = detail::plan_single_mark(*lattice, p, mark0);
            break;
        case Scenario::marked_class_e_scheme1:
        case Scenario::marked_class_e_scheme2: {
            const int e = letters[4];
            red.oracle_classes = {e};
            red.plan = detail::plan_marked_class_e(
                letters, s == Scenario::marked_class_e_scheme1 ? 1 : 2, p.count());
            // The scenario's marked set is the whole class e.
            red.marked_vertices = p.classes[e];
            p.marked_classes = {e};
            break;
        }
        case Scenario::marked_class_o: {
            // o: the bulk class of the mark's top-level subgraph.
            auto inA = detail::classes_within(*lattice, p, r - 1,
                                              {lattice->subgraph_id(mark0, r - 1)});
            const int o = detail::largest_class(p, inA);
            red.oracle_classes = {o};
            red.plan = detail::plan_marked_class_o(*lattice, p, mark0, o);
            red.marked_vertices = p.classes[o];
            p.marked_classes = {o};
            break;
        }
        case Scenario::table5_a:
            red.oracle_classes = p.marked_classes;
            red.plan = detail::plan_two_marks(*lattice, p, refine_marks, {5, 3, 1});
            break;
        case Scenario::table5_b:
            red.oracle_classes = p.marked_classes;
            red.plan = detail::plan_two_marks(*lattice, p, refine_marks, {4, 2, 1});
            break;
        case Scenario::table5_c:
            red.oracle_classes = p.marked_classes;
            red.plan = detail::plan_two_marks(*lattice, p, refine_marks, {4, 2, 1});
            break;
        case Scenario::table5_d:
            red.oracle_classes = p.marked_classes;
            red.plan = detail::plan_two_marks(*lattice, p, refine_marks, {3, 2, 1});
            break;
        case Scenario::table5_e:
            red.oracle_classes = p.marked_classes;
            red.plan = detail::plan_two_marks(*lattice, p, refine_marks, {3, 2, 1});
            break;
        case Scenario::fig11_three_marks:
            red.oracle_classes = p.marked_classes;
            red.plan = detail::plan_three_marks(*lattice, p, refine_marks);
            break;
    }

    red.quotient = quotient(*lattice, p);
    return red;
}

} // namespace ctqw
