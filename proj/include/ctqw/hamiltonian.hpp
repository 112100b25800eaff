#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

#include "ctqw/errors.hpp"
#include "ctqw/partition.hpp"

namespace ctqw {

enum class OracleKind {
    vertex_sum,  // restriction of sum_{i in class} |i><i| to the subspace
    class_state, // |class><class| on the normalized class state
};

// Marked-class projector specification. Within the invariant subspace the two
// kinds coincide whenever the marked set is a union of whole classes, which
// the partition guarantees; both are kept so that tests can assert the
// agreement instead of assuming it.
struct OracleSpec {
    OracleKind kind = OracleKind::vertex_sum;
    std::vector<int> targets;

    static OracleSpec none() { return {OracleKind::vertex_sum, {}}; }
    static OracleSpec classes(std::vector<int> t, OracleKind k = OracleKind::vertex_sum) {
        return {k, std::move(t)};
    }
};

enum class GeneratorKind { adjacency, laplacian };

struct SearchHamiltonian {
    Eigen::MatrixXd matrix;
    double gamma = 0.0;
    GeneratorKind generator_kind = GeneratorKind::adjacency;

    int dimension() const { return static_cast<int>(matrix.rows()); }
};

namespace detail {
inline void validate_oracle(const OracleSpec& oracle, int dim,
                            const std::vector<int>* marked_classes) {
    for (int t : oracle.targets) {
        if (t < 0 || t >= dim)
            throw InvalidOracle("target class " + std::to_string(t) + " out of range");
        if (marked_classes &&
            !std::binary_search(marked_classes->begin(), marked_classes->end(), t))
            throw InvalidOracle("target class " + std::to_string(t) + " is not marked");
    }
}
} // namespace detail

// H = -gamma*Q - oracle (adjacency kind), or -gamma*(Q - M*I) - oracle
// (laplacian kind; the lattice is M-regular so D = M*I). The two differ by a
// multiple of the identity and generate identical probability dynamics.
inline SearchHamiltonian build_hamiltonian(const QuotientMatrix& q, double gamma,
                                           const OracleSpec& oracle,
                                           GeneratorKind kind = GeneratorKind::adjacency,
                                           const std::vector<int>* marked_classes = nullptr) {
    if (!(gamma > 0.0))
        throw NonPositiveGamma("gamma must be > 0, got " + std::to_string(gamma));
    detail::validate_oracle(oracle, q.dimension(), marked_classes);

    SearchHamiltonian h;
    h.gamma = gamma;
    h.generator_kind = kind;
    h.matrix = -gamma * q.entries;
    if (kind == GeneratorKind::laplacian) {
        // Row sums of the lifted counts equal M for every class.
        const double degree = static_cast<double>(q.counts.row(0).sum());
        h.matrix.diagonal().array() += gamma * degree;
    }
    for (int t : oracle.targets) h.matrix(t, t) -= 1.0;
    return h;
}

struct Spectrum {
    Eigen::VectorXd values;  // ascending
    Eigen::MatrixXd vectors; // orthonormal columns
};

inline Spectrum spectrum(const Eigen::MatrixXd& symmetric) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(symmetric);
    if (solver.info() != Eigen::Success)
        throw ConvergenceFailure("dense symmetric eigensolver failed on " +
                                 std::to_string(symmetric.rows()) + "x" +
                                 std::to_string(symmetric.cols()) + " matrix");
    return {solver.eigenvalues(), solver.eigenvectors()};
}

inline Spectrum spectrum(const SearchHamiltonian& h) { return spectrum(h.matrix); }

} // namespace ctqw
