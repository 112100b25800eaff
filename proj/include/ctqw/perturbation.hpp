#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ctqw/errors.hpp"
#include "ctqw/hamiltonian.hpp"
#include "ctqw/scenario.hpp"

namespace ctqw {

struct BlockMatrices {
    Eigen::MatrixXd a, b;
};

namespace detail {
inline Eigen::MatrixXd principal_submatrix(const Eigen::MatrixXd& h,
                                           const std::vector<int>& idx) {
    Eigen::MatrixXd out(idx.size(), idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i)
        for (std::size_t j = 0; j < idx.size(); ++j)
            out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                h(idx[i], idx[j]);
    return out;
}
} // namespace detail

// The two leading-order blocks of H(gamma) for one stage: principal
// submatrices on block_a and block_b with inter-block and pruned entries
// dropped. Entries keep their exact finite-M values, including weight-1
// edges. The closed-form final stage instead uses the 1x1 pair
// (-1, -gamma*M) whose crossing sits at exactly 1/M.
inline BlockMatrices leading_order_blocks(const ReducedSystem& sys, const Stage& stage,
                                          double gamma) {
    if (stage.block_a.empty() || stage.block_b.empty())
        throw InvalidStage("both blocks must be nonempty");
    if (stage.closed_form) {
        BlockMatrices blocks;
        blocks.a = Eigen::MatrixXd::Constant(1, 1, -1.0);
        blocks.b = Eigen::MatrixXd::Constant(1, 1, -gamma * sys.m);
        return blocks;
    }
    const SearchHamiltonian h = build_hamiltonian(sys.q, gamma, sys.oracle());
    return {detail::principal_submatrix(h.matrix, stage.block_a),
            detail::principal_submatrix(h.matrix, stage.block_b)};
}

inline double ground_energy(const Eigen::MatrixXd& block) {
    if (block.rows() == 1) return block(0, 0);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(
        block, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success)
        throw ConvergenceFailure("block eigensolve failed");
    return solver.eigenvalues()[0];
}

struct CriticalRate {
    double gamma_c = 0.0;
    double crossing_energy = 0.0;
    std::vector<std::pair<double, double>> all_crossings; // (gamma, energy)
};

// Scans f(gamma) = E0_A - E0_B over a geometric grid, bisects every sign
// change, and returns all crossings. gamma_c is the crossing closest (in log
// distance) to the stage's asymptotic hint when one is set, else the
// smallest.
inline CriticalRate find_critical_rate(const ReducedSystem& sys, const Stage& stage,
                                       double gamma_lo, double gamma_hi,
                                       int grid_points = 512, double tol_cross = 1e-10) {
    if (!(gamma_lo > 0.0) || !(gamma_hi > gamma_lo))
        throw NonPositiveGamma("need 0 < gamma_lo < gamma_hi");
    if (grid_points < 32) throw InvalidStage("grid_points must be >= 32");

    if (stage.closed_form) {
        const double gc = 1.0 / sys.m;
        return {gc, -1.0, {{gc, -1.0}}};
    }

    auto f = [&](double g) {
        const BlockMatrices blocks = leading_order_blocks(sys, stage, g);
        return ground_energy(blocks.a) - ground_energy(blocks.b);
    };

    const double ratio = std::pow(gamma_hi / gamma_lo, 1.0 / (grid_points - 1));
    CriticalRate result;
    double g_prev = gamma_lo;
    double f_prev = f(g_prev);
    double f_first = f_prev, f_last = f_prev;
    for (int i = 1; i < grid_points; ++i) {
        const double g = (i == grid_points - 1) ? gamma_hi : gamma_lo * std::pow(ratio, i);
        const double fg = f(g);
        f_last = fg;
        if (f_prev == 0.0) {
            result.all_crossings.emplace_back(g_prev, ground_energy(
                leading_order_blocks(sys, stage, g_prev).a));
        } else if (f_prev * fg < 0.0) {
            double lo = g_prev, hi = g, flo = f_prev;
            double mid = 0.5 * (lo + hi), fmid = 0.0;
            for (int it = 0; it < 200; ++it) {
                mid = 0.5 * (lo + hi);
                fmid = f(mid);
                if (std::abs(fmid) <= tol_cross || (hi - lo) <= 1e-16 * mid) break;
                if (flo * fmid < 0.0) {
                    hi = mid;
                } else {
                    lo = mid;
                    flo = fmid;
                }
            }
            result.all_crossings.emplace_back(
                mid, ground_energy(leading_order_blocks(sys, stage, mid).a));
        }
        g_prev = g;
        f_prev = fg;
    }

    if (result.all_crossings.empty())
        throw NoCrossing("no sign change of E0_A - E0_B on [" + std::to_string(gamma_lo) +
                         ", " + std::to_string(gamma_hi) + "]; f(lo)=" +
                         std::to_string(f_first) + ", f(hi)=" + std::to_string(f_last));

    const double hint = stage.hint_coeff > 0 ? stage.gamma_hint(sys.m) : 0.0;
    auto best = result.all_crossings.front();
    if (hint > 0.0) {
        for (const auto& cr : result.all_crossings)
            if (std::abs(std::log(cr.first / hint)) < std::abs(std::log(best.first / hint)))
                best = cr;
    }
    result.gamma_c = best.first;
    result.crossing_energy = best.second;
    return result;
}

inline CriticalRate find_critical_rate(const ReducedSystem& sys, const Stage& stage,
                                       int grid_points = 512, double tol_cross = 1e-10) {
    if (!(stage.hint_coeff > 0))
        throw InvalidStage("stage carries no asymptotic hint; pass an explicit range");
    const double hint = stage.gamma_hint(sys.m);
    return find_critical_rate(sys, stage, hint / 10.0, hint * 10.0, grid_points, tol_cross);
}

struct TwoLevelModel {
    double e_minus = 0.0;
    double e_plus = 0.0;
    double stage_time = 0.0;
    Eigen::VectorXd ground_a, ground_b; // block ground states in the full basis
};

// Effective 2x2 model of the full H(gamma) in the basis of the two block
// ground states. The closed-form final stage evaluates the pair
// (-1, -gamma*M) with coupling -gamma*sqrt(M) instead, which at gamma = 1/M
// gives E = -1 -+ sqrt(1/M) and the stage time pi*sqrt(M)/2.
inline TwoLevelModel two_level_model(const ReducedSystem& sys, const Stage& stage,
                                     double gamma) {
    const int d = sys.class_count();
    TwoLevelModel model;

    if (stage.closed_form) {
        const double m = sys.m;
        Eigen::Matrix2d h2;
        h2 << -1.0, -gamma * std::sqrt(m), -gamma * std::sqrt(m), -gamma * m;
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> solver(h2);
        model.e_minus = solver.eigenvalues()[0];
        model.e_plus = solver.eigenvalues()[1];
        model.ground_a = Eigen::VectorXd::Zero(d);
        model.ground_b = Eigen::VectorXd::Zero(d);
        model.ground_a[stage.block_a.front()] = 1.0;
        model.ground_b[stage.block_b.front()] = 1.0;
    } else {
        if (stage.block_a.empty() || stage.block_b.empty())
            throw InvalidStage("both blocks must be nonempty");
        const SearchHamiltonian h = build_hamiltonian(sys.q, gamma, sys.oracle());
        const BlockMatrices blocks = {detail::principal_submatrix(h.matrix, stage.block_a),
                                      detail::principal_submatrix(h.matrix, stage.block_b)};
        auto embed = [&](const Eigen::MatrixXd& block, const std::vector<int>& idx,
                         const char* side) {
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(block);
            if (solver.info() != Eigen::Success)
                throw ConvergenceFailure("block eigensolve failed");
            if (block.rows() > 1 &&
                solver.eigenvalues()[1] - solver.eigenvalues()[0] < 1e-9)
                throw DegenerateBlockGround(std::string("block ") + side +
                                            " has an ambiguous ground state");
            Eigen::VectorXd full = Eigen::VectorXd::Zero(d);
            Eigen::VectorXd vec = solver.eigenvectors().col(0);
            // deterministic sign: largest-magnitude component positive
            Eigen::Index imax = 0;
            vec.cwiseAbs().maxCoeff(&imax);
            if (vec[imax] < 0) vec = -vec;
            for (std::size_t i = 0; i < idx.size(); ++i)
                full[idx[i]] = vec[static_cast<Eigen::Index>(i)];
            return full;
        };
        model.ground_a = embed(blocks.a, stage.block_a, "A");
        model.ground_b = embed(blocks.b, stage.block_b, "B");

        Eigen::Matrix2d h2;
        h2(0, 0) = model.ground_a.dot(h.matrix * model.ground_a);
        h2(0, 1) = model.ground_a.dot(h.matrix * model.ground_b);
        h2(1, 0) = h2(0, 1);
        h2(1, 1) = model.ground_b.dot(h.matrix * model.ground_b);
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> solver(h2);
        model.e_minus = solver.eigenvalues()[0];
        model.e_plus = solver.eigenvalues()[1];
    }

    if (!(model.e_plus > model.e_minus))
        throw DegenerateBlockGround("two-level gap vanished");
    model.stage_time = M_PI / (model.e_plus - model.e_minus);
    return model;
}

struct PruneReport {
    bool path_ok = false;
    int unpruned_path_length = -1;
    int pruned_path_length = -1; // -1: unreachable
    bool structure_ok = false;
    std::string structure_note;
};

namespace detail {

// BFS over the quotient support graph, optionally avoiding a class set.
inline int quotient_path_length(const QuotientMatrix& q, int from, int to,
                                const std::vector<char>& blocked) {
    const int k = q.dimension();
    std::vector<int> dist(k, -1);
    std::vector<int> queue;
    if (blocked[from] || blocked[to]) return -1;
    dist[from] = 0;
    queue.push_back(from);
    for (std::size_t head = 0; head < queue.size(); ++head) {
        const int c = queue[head];
        if (c == to) return dist[c];
        for (int j = 0; j < k; ++j)
            if (j != c && !blocked[j] && q.counts(c, j) > 0 && dist[j] < 0) {
                dist[j] = dist[c] + 1;
                queue.push_back(j);
            }
    }
    return -1;
}

// Coverage profile of one representative substructure: per level below it,
// how many complete subgraphs the block covers fully / partially.
struct CoverageProfile {
    std::vector<std::pair<int, int>> per_level; // (full, partial), level 0 upward
    bool rep_full = false;

    bool operator==(const CoverageProfile& other) const {
        return per_level == other.per_level && rep_full == other.rep_full;
    }
};

inline CoverageProfile coverage_profile(const Lattice& lat, const Partition& p,
                                        const std::vector<int>& block, int level,
                                        std::int64_t rep) {
    std::vector<char> in_block(lat.vertex_count(), 0);
    for (int c : block)
        for (VertexId v : p.classes[c]) in_block[v] = 1;

    CoverageProfile prof;
    std::int64_t rep_total = 0, rep_covered = 0;
    for (VertexId v = 0; v < lat.vertex_count(); ++v) {
        if (lat.subgraph_id(v, level) != rep) continue;
        ++rep_total;
        if (in_block[v]) ++rep_covered;
    }
    prof.rep_full = rep_covered == rep_total;

    for (int k = 0; k < level; ++k) {
        std::map<std::int64_t, std::pair<std::int64_t, std::int64_t>> sub; // id -> (covered, total)
        for (VertexId v = 0; v < lat.vertex_count(); ++v) {
            if (lat.subgraph_id(v, level) != rep) continue;
            auto& entry = sub[lat.subgraph_id(v, k)];
            ++entry.second;
            if (in_block[v]) ++entry.first;
        }
        int full = 0, partial = 0;
        for (const auto& [id, cov] : sub) {
            if (cov.first == cov.second)
                ++full;
            else if (cov.first > 0)
                ++partial;
        }
        prof.per_level.emplace_back(full, partial);
    }
    return prof;
}

// Smallest level whose subgraphs contain every class of the block; returns
// the set of those subgraph ids.
inline std::pair<int, std::set<std::int64_t>> block_homes(const Lattice& lat,
                                                          const Partition& p,
                                                          const std::vector<int>& block) {
    for (int level = 0; level < lat.order(); ++level) {
        std::size_t max_per_class = 0;
        std::set<std::int64_t> homes;
        for (int c : block) {
            std::set<std::int64_t> mine;
            for (VertexId v : p.classes[c]) mine.insert(lat.subgraph_id(v, level));
            max_per_class = std::max(max_per_class, mine.size());
            homes.insert(mine.begin(), mine.end());
        }
        if (max_per_class == 1) return {level, homes};
    }
    return {lat.order(), {}};
}

} // namespace detail

// Diagnostic check of the two pruning constraints for one stage: (1) pruning
// must not lengthen the shortest quotient-graph path between the initial and
// target classes; (2) the coverage profiles of the two blocks over their
// representative substructures must agree (structural consistency).
inline PruneReport prune_check(const ScenarioReduction& red, const Stage& stage,
                               int initial_class, int target_class) {
    const Lattice& lat = *red.lattice;
    const Partition& p = red.partition;
    PruneReport report;

    std::vector<char> open(p.count(), 0), blocked(p.count(), 0);
    for (int c : stage.pruned) blocked[c] = 1;
    report.unpruned_path_length =
        detail::quotient_path_length(red.quotient, initial_class, target_class, open);
    report.pruned_path_length =
        detail::quotient_path_length(red.quotient, initial_class, target_class, blocked);
    report.path_ok = report.pruned_path_length == report.unpruned_path_length &&
                     report.pruned_path_length >= 0;

    if (stage.closed_form) {
        report.structure_ok = true;
        report.structure_note = "closed-form stage, single classes on both sides";
        return report;
    }

    auto [level_a, homes_a] = detail::block_homes(lat, p, stage.block_a);
    auto [level_b, homes_b] = detail::block_homes(lat, p, stage.block_b);
    const int level = std::max(level_a, level_b);
    if (level >= lat.order()) {
        report.structure_ok = true;
        report.structure_note = "blocks span the whole lattice; profile check skipped";
        return report;
    }
    auto recompute_homes = [&](const std::vector<int>& block) {
        std::set<std::int64_t> homes;
        for (int c : block)
            for (VertexId v : p.classes[c]) homes.insert(lat.subgraph_id(v, level));
        return homes;
    };
    homes_a = recompute_homes(stage.block_a);
    homes_b = recompute_homes(stage.block_b);

    std::optional<detail::CoverageProfile> ref_a, ref_b;
    bool consistent = true;
    for (std::int64_t rep : homes_a) {
        auto prof = detail::coverage_profile(lat, p, stage.block_a, level, rep);
        if (!ref_a) ref_a = prof;
        else if (!(prof == *ref_a)) consistent = false;
    }
    for (std::int64_t rep : homes_b) {
        auto prof = detail::coverage_profile(lat, p, stage.block_b, level, rep);
        if (!ref_b) ref_b = prof;
        else if (!(prof == *ref_b)) consistent = false;
    }
    report.structure_ok = consistent && ref_a && ref_b && (*ref_a == *ref_b);
    if (!report.structure_ok)
        report.structure_note = "coverage profiles of the two blocks differ";
    return report;
}

} // namespace ctqw
