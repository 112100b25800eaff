#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include "ctqw/errors.hpp"
#include "ctqw/hamiltonian.hpp"

namespace ctqw {

struct ScheduleSegment {
    double gamma = 0.0;
    double duration = 0.0;
};

struct Schedule {
    std::vector<ScheduleSegment> segments;

    void validate() const {
        if (segments.empty()) throw InvalidSchedule("schedule has no segments");
        for (const auto& s : segments) {
            if (!(s.gamma > 0.0))
                throw InvalidSchedule("segment gamma must be > 0");
            if (s.duration < 0.0)
                throw InvalidSchedule("segment duration must be >= 0");
        }
    }

    double total_duration() const {
        double t = 0.0;
        for (const auto& s : segments) t += s.duration;
        return t;
    }
};

// |psi(0)>: the uniform superposition over all N vertices, expressed on class
// states. Class c carries amplitude sqrt(|V_c| / N).
inline Eigen::VectorXcd uniform_initial_state(const std::vector<std::int64_t>& sizes) {
    double n = 0.0;
    for (auto s : sizes) n += static_cast<double>(s);
    Eigen::VectorXcd psi(sizes.size());
    for (std::size_t c = 0; c < sizes.size(); ++c)
        psi[c] = std::sqrt(static_cast<double>(sizes[c]) / n);
    return psi;
}

inline Eigen::VectorXcd uniform_initial_state(const Partition& p) {
    return uniform_initial_state(p.sizes);
}

// psi(t) = V exp(-i Lambda t) V^T psi via the dense eigendecomposition.
inline Eigen::VectorXcd evolve_with(const Spectrum& s, const Eigen::VectorXcd& psi,
                                    double t) {
    Eigen::VectorXcd coeff = s.vectors.transpose() * psi;
    for (Eigen::Index k = 0; k < coeff.size(); ++k)
        coeff[k] *= std::exp(std::complex<double>(0.0, -s.values[k] * t));
    return s.vectors * coeff;
}

inline Eigen::VectorXcd evolve_segment(const SearchHamiltonian& h,
                                       const Eigen::VectorXcd& psi, double t) {
    if (psi.size() != h.dimension())
        throw DimensionMismatch("state dimension " + std::to_string(psi.size()) +
                                " vs Hamiltonian " + std::to_string(h.dimension()));
    return evolve_with(spectrum(h), psi, t);
}

struct EvolutionResult {
    std::vector<double> times;
    Eigen::MatrixXd probabilities; // one row per sample, one column per class
    Eigen::VectorXcd final_state;
    std::vector<std::size_t> segment_start; // sample index where each segment begins
};

inline void record_sample(EvolutionResult& r, double t, const Eigen::VectorXcd& psi) {
    r.times.push_back(t);
    const Eigen::Index row = static_cast<Eigen::Index>(r.times.size()) - 1;
    if (r.probabilities.rows() <= row)
        r.probabilities.conservativeResize(std::max<Eigen::Index>(2 * row + 1, 64),
                                           psi.size());
    r.probabilities.row(row) = psi.cwiseAbs2().real().transpose();
}

// Evolves through the segments in order, rebuilding H(gamma) per segment and
// sampling class probabilities at uniform instants inside each segment. The
// state is handed across segment boundaries exactly as evolved.
inline EvolutionResult run_schedule(const QuotientMatrix& q, const OracleSpec& oracle,
                                    const Schedule& schedule, const Eigen::VectorXcd& psi0,
                                    int samples_per_segment = 512,
                                    GeneratorKind kind = GeneratorKind::adjacency) {
    schedule.validate();
    if (samples_per_segment < 1)
        throw InvalidSchedule("samples_per_segment must be >= 1");

    EvolutionResult r;
    Eigen::VectorXcd psi = psi0;
    double t0 = 0.0;
    record_sample(r, 0.0, psi);
    for (const auto& seg : schedule.segments) {
        r.segment_start.push_back(r.times.size() - 1);
        const SearchHamiltonian h = build_hamiltonian(q, seg.gamma, oracle, kind);
        const Spectrum s = spectrum(h);
        for (int j = 1; j <= samples_per_segment; ++j) {
            const double dt = seg.duration * j / samples_per_segment;
            record_sample(r, t0 + dt, evolve_with(s, psi, dt));
        }
        psi = evolve_with(s, psi, seg.duration);
        t0 += seg.duration;
    }
    r.probabilities.conservativeResize(static_cast<Eigen::Index>(r.times.size()),
                                       psi.size());
    r.final_state = psi;
    return r;
}

struct Peak {
    double time = 0.0;
    double probability = 0.0;
};

// Maximum of the target-class probability over [t_lo, t_hi]; earliest
// maximizer on the sample grid wins ties.
inline Peak peak_probability(const EvolutionResult& r, int target_class, double t_lo,
                             double t_hi) {
    if (target_class < 0 || target_class >= r.probabilities.cols())
        throw DimensionMismatch("target class " + std::to_string(target_class) +
                                " out of range");
    Peak best;
    bool seen = false;
    for (std::size_t i = 0; i < r.times.size(); ++i) {
        if (r.times[i] < t_lo || r.times[i] > t_hi) continue;
        const double p = r.probabilities(static_cast<Eigen::Index>(i), target_class);
        if (!seen || p > best.probability) {
            best = {r.times[i], p};
            seen = true;
        }
    }
    if (!seen)
        throw EmptyWindow("no samples in [" + std::to_string(t_lo) + ", " +
                          std::to_string(t_hi) + "]");
    return best;
}

} // namespace ctqw
