#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ctqw/errors.hpp"

namespace ctqw {

using VertexId = std::int32_t;

// Hierarchical address (c0, c1, ..., cr): c0 picks a vertex of the base
// complete graph K_{M+1}, each later component picks a clone inside the
// K_M that replaced the previous-level vertex.
using VertexAddress = std::vector<int>;

struct LatticeSpec {
    int order = 0; // r >= 0, number of replacement rounds
    int dim = 2;   // M >= 2, clique dimension

    void validate() const {
        if (order < 0)
            throw InvalidSpec("order must be >= 0, got " + std::to_string(order));
        if (dim < 2)
            throw InvalidSpec("dim must be >= 2, got " + std::to_string(dim));
        if (order >= 2 && dim < 4)
            throw InvalidSpec("dim must be >= 4 when order >= 2, got dim=" +
                              std::to_string(dim));
    }

    std::int64_t vertex_count() const {
        std::int64_t n = dim + 1;
        for (int k = 0; k < order; ++k) n *= dim;
        return n;
    }
};

// Truncated simplex lattice of order r and dimension M. Immutable after
// construction; every vertex has degree exactly M. Vertex ids follow the
// lexicographic order of addresses (the id is the mixed-radix value of the
// address tuple), so sorted neighbor lists are sorted addresses too.
class Lattice {
public:
    explicit Lattice(LatticeSpec spec) : spec_(spec) {
        spec_.validate();
        build();
    }

    const LatticeSpec& spec() const { return spec_; }
    int order() const { return spec_.order; }
    int dim() const { return spec_.dim; }
    VertexId vertex_count() const { return n_; }
    std::int64_t edge_count() const { return static_cast<std::int64_t>(n_) * dim() / 2; }

    std::span<const VertexId> neighbors(VertexId v) const {
        check_vertex(v);
        return {adj_.data() + static_cast<std::size_t>(v) * dim(),
                static_cast<std::size_t>(dim())};
    }

    std::vector<VertexAddress> neighbor_addresses(const VertexAddress& a) const {
        VertexId v = id_of(a);
        std::vector<VertexAddress> out;
        out.reserve(dim());
        for (VertexId w : neighbors(v)) out.push_back(address(w));
        return out;
    }

    VertexAddress address(VertexId v) const {
        check_vertex(v);
        VertexAddress a(spec_.order + 1);
        for (int k = spec_.order; k >= 1; --k) {
            a[k] = static_cast<int>(v % dim());
            v /= dim();
        }
        a[0] = static_cast<int>(v);
        return a;
    }

    VertexId id_of(const VertexAddress& a) const {
        if (static_cast<int>(a.size()) != spec_.order + 1)
            throw UnknownVertex("address length " + std::to_string(a.size()) +
                                ", expected " + std::to_string(spec_.order + 1));
        if (a[0] < 0 || a[0] > dim())
            throw UnknownVertex("component 0 out of range: " + std::to_string(a[0]));
        std::int64_t v = a[0];
        for (int k = 1; k <= spec_.order; ++k) {
            if (a[k] < 0 || a[k] >= dim())
                throw UnknownVertex("component " + std::to_string(k) +
                                    " out of range: " + std::to_string(a[k]));
            v = v * dim() + a[k];
        }
        return static_cast<VertexId>(v);
    }

    // Identifier of the level-k complete subgraph containing v: the address
    // prefix (c0, ..., c_{r-1-k}) packed as an integer. Two vertices share a
    // value iff they lie in the same k-th-order complete subgraph.
    std::int64_t subgraph_id(VertexId v, int level) const {
        check_vertex(v);
        if (level < 0 || level >= spec_.order)
            throw LevelOutOfRange("level " + std::to_string(level) +
                                  " not in [0, " + std::to_string(spec_.order) + ")");
        std::int64_t id = v;
        for (int k = 0; k <= level; ++k) id /= dim();
        return id;
    }

    int subgraph_count(int level) const {
        std::int64_t c = spec_.vertex_count();
        for (int k = 0; k <= level; ++k) c /= dim();
        return static_cast<int>(c);
    }

    // Hierarchical separation of two vertices: the smallest k such that both
    // lie in the same k-th-order complete subgraph, or r if only the whole
    // lattice contains them. Clique mates are at level 0; endpoints of an
    // edge between top-level subgraphs are at level r.
    int separation_level(VertexId v, VertexId w) const {
        check_vertex(v);
        check_vertex(w);
        std::int64_t a = v, b = w;
        for (int k = 0; k < spec_.order; ++k) {
            a /= dim();
            b /= dim();
            if (a == b) return k;
        }
        return spec_.order;
    }

    // Canonical edge list: smaller endpoint first, lexicographically sorted.
    std::vector<std::pair<VertexId, VertexId>> canonical_edges() const {
        std::vector<std::pair<VertexId, VertexId>> edges;
        edges.reserve(static_cast<std::size_t>(edge_count()));
        for (VertexId v = 0; v < n_; ++v)
            for (VertexId w : neighbors(v))
                if (v < w) edges.emplace_back(v, w);
        return edges; // already sorted: v ascending, neighbor lists ascending
    }

private:
    void check_vertex(VertexId v) const {
        if (v < 0 || v >= n_)
            throw UnknownVertex("vertex id " + std::to_string(v) + " out of range");
    }

    void build() {
        const int m = dim();
        // Order 0: the complete graph K_{M+1}.
        std::vector<VertexId> adj(static_cast<std::size_t>(m + 1) * m);
        for (int v = 0; v <= m; ++v) {
            int idx = 0;
            for (int w = 0; w <= m; ++w)
                if (w != v) adj[static_cast<std::size_t>(v) * m + idx++] = w;
        }
        std::int64_t n = m + 1;

        for (int round = 0; round < spec_.order; ++round) {
            // Replace every vertex u by a clique of M clones. The edge that
            // used to join u to its k-th smallest neighbor moves to clone
            // (u, k); the partner clone index is u's rank in that neighbor's
            // sorted list.
            std::vector<VertexId> next(static_cast<std::size_t>(n) * m * m);
            for (std::int64_t u = 0; u < n; ++u) {
                const VertexId* nb = adj.data() + u * m;
                for (int k = 0; k < m; ++k) {
                    const std::int64_t v = nb[k];
                    const VertexId* vnb = adj.data() + v * m;
                    const int back =
                        static_cast<int>(std::lower_bound(vnb, vnb + m, static_cast<VertexId>(u)) - vnb);
                    VertexId* row = next.data() + (u * m + k) * m;
                    int idx = 0;
                    const VertexId ext = static_cast<VertexId>(v * m + back);
                    for (int j = 0; j < m; ++j)
                        if (j != k) row[idx++] = static_cast<VertexId>(u * m + j);
                    row[m - 1] = ext;
                    std::sort(row, row + m);
                    (void)idx;
                }
            }
            adj = std::move(next);
            n *= m;
        }

        adj_ = std::move(adj);
        n_ = static_cast<VertexId>(n);
    }

    LatticeSpec spec_;
    VertexId n_ = 0;
    std::vector<VertexId> adj_; // flat neighbor lists, stride = dim, each sorted
};

inline Lattice build_lattice(const LatticeSpec& spec) { return Lattice(spec); }

} // namespace ctqw
