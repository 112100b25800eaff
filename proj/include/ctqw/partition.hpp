#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include "ctqw/errors.hpp"
#include "ctqw/lattice.hpp"

namespace ctqw {

// Equitable vertex partition. Classes are ordered canonically by
// (size ascending, smallest member id); members are sorted.
struct Partition {
    std::vector<std::vector<VertexId>> classes;
    std::vector<std::int64_t> sizes;
    std::vector<int> marked_classes; // indices of all-marked classes
    std::vector<int> class_of;       // per-vertex class index

    int count() const { return static_cast<int>(classes.size()); }

    bool is_marked(int c) const {
        return std::binary_search(marked_classes.begin(), marked_classes.end(), c);
    }
};

// Coarsest hierarchy-respecting equitable partition refining {marked,
// unmarked}, computed by iterated color refinement: recolor every vertex by
// (current color, sorted multiset of (edge separation level, neighbor color))
// until the color count stabilizes. Keeping the separation level in the key
// matters: a plain neighbor-color multiset is blind to whether an edge stays
// inside a complete subgraph or bridges two of them, and on these lattices
// that collapses classes that evolve identically only by coincidence of
// counts. New colors are dense ids assigned by sorting the keys, never
// hashes.
inline Partition refine(const Lattice& lattice, const std::vector<VertexId>& marked) {
    const int m = lattice.dim();
    const VertexId n = lattice.vertex_count();

    std::vector<int> color(n, 0);
    for (VertexId v : marked) {
        if (v < 0 || v >= n)
            throw UnknownVertex("marked vertex id " + std::to_string(v) + " out of range");
        color[v] = 1;
    }

    int ncolors = marked.empty() ? 1 : 2;
    const int stride = m + 1;
    using Key = std::int64_t;
    std::vector<Key> keys(static_cast<std::size_t>(n) * stride);
    std::vector<VertexId> perm(n);

    for (;;) {
        for (VertexId v = 0; v < n; ++v) {
            Key* key = keys.data() + static_cast<std::size_t>(v) * stride;
            key[0] = color[v];
            auto nb = lattice.neighbors(v);
            for (int j = 0; j < m; ++j)
                key[1 + j] = (static_cast<Key>(lattice.separation_level(v, nb[j])) << 32) |
                             static_cast<Key>(color[nb[j]]);
            std::sort(key + 1, key + stride);
        }
        std::iota(perm.begin(), perm.end(), 0);
        std::sort(perm.begin(), perm.end(), [&](VertexId a, VertexId b) {
            const Key* ka = keys.data() + static_cast<std::size_t>(a) * stride;
            const Key* kb = keys.data() + static_cast<std::size_t>(b) * stride;
            return std::lexicographical_compare(ka, ka + stride, kb, kb + stride);
        });
        std::vector<int> next(n);
        int c = 0;
        for (VertexId i = 0; i < n; ++i) {
            if (i > 0) {
                const Key* ka = keys.data() + static_cast<std::size_t>(perm[i - 1]) * stride;
                const Key* kb = keys.data() + static_cast<std::size_t>(perm[i]) * stride;
                if (!std::equal(ka, ka + stride, kb)) ++c;
            }
            next[perm[i]] = c;
        }
        ++c;
        if (c == ncolors) break; // refinement is monotone: no growth == stable
        color = std::move(next);
        ncolors = c;
    }

    // Canonical class order: size ascending, then smallest member id.
    std::vector<std::vector<VertexId>> buckets(ncolors);
    for (VertexId v = 0; v < n; ++v) buckets[color[v]].push_back(v);
    std::sort(buckets.begin(), buckets.end(), [](const auto& a, const auto& b) {
        if (a.size() != b.size()) return a.size() < b.size();
        return a.front() < b.front();
    });

    Partition p;
    p.classes = std::move(buckets);
    p.class_of.assign(n, -1);
    p.sizes.resize(p.classes.size());
    std::vector<char> is_marked(n, 0);
    for (VertexId v : marked) is_marked[v] = 1;
    for (int c = 0; c < p.count(); ++c) {
        p.sizes[c] = static_cast<std::int64_t>(p.classes[c].size());
        bool any = false, all = true;
        for (VertexId v : p.classes[c]) {
            p.class_of[v] = c;
            if (is_marked[v]) any = true; else all = false;
        }
        if (any && !all)
            throw NotEquitable("class " + std::to_string(c) + " mixes marked and unmarked");
        if (any && all) p.marked_classes.push_back(c);
    }
    return p;
}

// Integer class-to-class neighbor counts b_ij together with the symmetric
// normalized quotient Q_ij = b_ij * sqrt(|V_i| / |V_j|).
struct QuotientMatrix {
    Eigen::MatrixXd entries;
    std::vector<std::int64_t> class_sizes;
    Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic> counts; // b_ij

    int dimension() const { return static_cast<int>(entries.rows()); }
};

// Recounts b_ij for every member vertex; throws NotEquitable on any
// disagreement. This is the direct equitability check the tests reuse.
inline Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>
neighbor_counts(const Lattice& lattice, const Partition& p) {
    const int k = p.count();
    Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic> b(k, k);
    b.setZero();
    std::vector<std::int64_t> row(k);
    for (int c = 0; c < k; ++c) {
        bool first = true;
        for (VertexId v : p.classes[c]) {
            std::fill(row.begin(), row.end(), 0);
            for (VertexId w : lattice.neighbors(v)) ++row[p.class_of[w]];
            if (first) {
                for (int j = 0; j < k; ++j) b(c, j) = row[j];
                first = false;
            } else {
                for (int j = 0; j < k; ++j)
                    if (b(c, j) != row[j])
                        throw NotEquitable("vertex " + std::to_string(v) +
                                           " disagrees with class " + std::to_string(c) +
                                           " on neighbors in class " + std::to_string(j));
            }
        }
    }
    return b;
}

inline QuotientMatrix quotient_from_counts(
    const Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>& b,
    const std::vector<std::int64_t>& sizes) {
    const int k = static_cast<int>(sizes.size());
    QuotientMatrix q;
    q.counts = b;
    q.class_sizes = sizes;
    q.entries.resize(k, k);
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j)
            q.entries(i, j) = static_cast<double>(b(i, j)) *
                              std::sqrt(static_cast<double>(sizes[i]) /
                                        static_cast<double>(sizes[j]));
    // |V_i| b_ij = |V_j| b_ji guarantees symmetry; enforce it exactly.
    for (int i = 0; i < k; ++i)
        for (int j = i + 1; j < k; ++j) {
            if (sizes[i] * b(i, j) != sizes[j] * b(j, i))
                throw NotEquitable("count balance violated at (" + std::to_string(i) +
                                   "," + std::to_string(j) + ")");
            const double s = 0.5 * (q.entries(i, j) + q.entries(j, i));
            q.entries(i, j) = q.entries(j, i) = s;
        }
    return q;
}

inline QuotientMatrix quotient(const Lattice& lattice, const Partition& p) {
    return quotient_from_counts(neighbor_counts(lattice, p), p.sizes);
}

// Expands a reduced state onto vertices: members of class c receive
// amplitude(c) / sqrt(|V_c|).
inline Eigen::VectorXcd lift(const Partition& p, const Eigen::VectorXcd& reduced) {
    if (reduced.size() != p.count())
        throw DimensionMismatch("reduced state has " + std::to_string(reduced.size()) +
                                " entries, partition has " + std::to_string(p.count()));
    Eigen::VectorXcd full(p.class_of.size());
    for (int c = 0; c < p.count(); ++c) {
        const std::complex<double> amp =
            reduced[c] / std::sqrt(static_cast<double>(p.sizes[c]));
        for (VertexId v : p.classes[c]) full[v] = amp;
    }
    return full;
}

// Projection of a vertex-space state onto the class-state basis.
inline Eigen::VectorXcd project(const Partition& p, const Eigen::VectorXcd& full) {
    if (full.size() != static_cast<Eigen::Index>(p.class_of.size()))
        throw DimensionMismatch("full state has " + std::to_string(full.size()) +
                                " entries, lattice has " + std::to_string(p.class_of.size()));
    Eigen::VectorXcd reduced(p.count());
    for (int c = 0; c < p.count(); ++c) {
        std::complex<double> s = 0.0;
        for (VertexId v : p.classes[c]) s += full[v];
        reduced[c] = s / std::sqrt(static_cast<double>(p.sizes[c]));
    }
    return reduced;
}

} // namespace ctqw
