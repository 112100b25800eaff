#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <numeric>
#include <string>
#include <vector>

#include "ctqw/errors.hpp"
#include "ctqw/scenario.hpp"

namespace ctqw {

// Scenario reduction valid at every dimension M. Built by reducing the
// scenario at a run of consecutive sample dimensions, matching classes across
// them by dimension-independent address keys, and fitting the exact
// M-dependence: class sizes are integer-valued polynomials of degree <= r+1
// (verified by vanishing higher differences), neighbor counts are affine in M
// (verified at every sample). Evaluation then reconstructs the quotient at
// any M without touching a lattice.
class ReducedScenarioModel {
public:
    explicit ReducedScenarioModel(Scenario scenario) : scenario_(scenario) { build(); }

    Scenario scenario() const { return scenario_; }
    int class_count() const { return static_cast<int>(keys_.size()); }
    const std::vector<int>& sample_dims() const { return dims_; }

    ReducedSystem at(int m) const {
        if (m < dims_.front())
            throw InvalidSpec("model evaluation needs M >= " + std::to_string(dims_.front()) +
                              "; use the direct reduction for smaller M");
        const int k = class_count();
        ReducedSystem sys;
        sys.m = m;
        sys.sizes.resize(k);
        for (int c = 0; c < k; ++c) sys.sizes[c] = size_at(c, m);
        Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic> b(k, k);
        for (int i = 0; i < k; ++i)
            for (int j = 0; j < k; ++j)
                b(i, j) = b_const_(i, j) + b_slope_(i, j) * m;
        sys.q = quotient_from_counts(b, sys.sizes);
        sys.oracle_classes = oracle_classes_;
        sys.plan = plan_;
        sys.labels = labels_;
        return sys;
    }

    std::int64_t size_at(int c, int m) const {
        // Newton form over the consecutive sample dims: size(m) =
        // sum_k diff_k * C(m - m0, k), evaluated in exact integers.
        const int x = m - dims_.front();
        __int128 total = 0;
        for (std::size_t k = 0; k < newton_[c].size(); ++k) {
            __int128 binom = 1;
            for (std::size_t j = 0; j < k; ++j) {
                binom *= x - static_cast<int>(j);
                binom /= static_cast<int>(j) + 1; // stays integral stepwise
            }
            total += static_cast<__int128>(newton_[c][k]) * binom;
        }
        if (total <= 0 || total > static_cast<__int128>(INT64_MAX))
            throw ModelBuildFailure("class size fit out of range at M=" + std::to_string(m));
        return static_cast<std::int64_t>(total);
    }

private:
    // Address components counted from the top become negative so the key is
    // dimension-independent: component c turns into c - base when it sits in
    // the upper half of its range.
    static std::vector<int> normalized_key(const VertexAddress& a, int m) {
        std::vector<int> key(a.size());
        for (std::size_t k = 0; k < a.size(); ++k) {
            const int base = (k == 0) ? m + 1 : m;
            key[k] = 2 * a[k] > base ? a[k] - base : a[k];
        }
        return key;
    }

    void build() {
        const int r = scenario_order(scenario_);
        switch (r) {
            case 1: dims_ = {10, 11, 12, 13, 14}; break;
            case 2: dims_ = {8, 9, 10, 11, 12}; break;
            default: dims_ = {8, 9, 10, 11, 12, 13}; break;
        }
        const int nd = static_cast<int>(dims_.size());
        const int max_degree = r + 1;

        std::vector<ScenarioReduction> reds;
        reds.reserve(nd);
        for (int m : dims_) reds.push_back(reduce_scenario(scenario_, m));

        const int k = reds.front().partition.count();
        for (const auto& red : reds)
            if (red.partition.count() != k)
                throw ModelBuildFailure("class count varies across sample dims for " +
                                        to_string(scenario_));

        // Keys and the per-sample permutation sample-class -> model-class.
        std::vector<std::vector<std::vector<int>>> sample_keys(nd);
        for (int s = 0; s < nd; ++s) {
            sample_keys[s].resize(k);
            for (int c = 0; c < k; ++c)
                sample_keys[s][c] = normalized_key(
                    reds[s].lattice->address(reds[s].partition.classes[c].front()),
                    dims_[s]);
        }
        keys_ = sample_keys.front();
        std::sort(keys_.begin(), keys_.end());
        if (std::adjacent_find(keys_.begin(), keys_.end()) != keys_.end())
            throw ModelBuildFailure("duplicate class keys for " + to_string(scenario_));

        std::vector<std::vector<int>> to_model(nd, std::vector<int>(k, -1));
        for (int s = 0; s < nd; ++s) {
            for (int c = 0; c < k; ++c) {
                auto it = std::lower_bound(keys_.begin(), keys_.end(), sample_keys[s][c]);
                if (it == keys_.end() || *it != sample_keys[s][c])
                    throw ModelBuildFailure("class key mismatch across sample dims for " +
                                            to_string(scenario_));
                to_model[s][c] = static_cast<int>(it - keys_.begin());
            }
            std::vector<int> seen(k, 0);
            for (int c = 0; c < k; ++c) ++seen[to_model[s][c]];
            for (int c = 0; c < k; ++c)
                if (seen[c] != 1)
                    throw ModelBuildFailure("class keys not bijective across sample dims");
        }

        // Size polynomials via forward differences; degree bound checked.
        newton_.assign(k, {});
        for (int c = 0; c < k; ++c) {
            std::vector<std::int64_t> table(nd);
            for (int s = 0; s < nd; ++s) {
                const int local = find_local(to_model[s], c);
                table[s] = reds[s].partition.sizes[local];
            }
            std::vector<std::int64_t> diffs;
            for (int level = 0; level < nd; ++level) {
                diffs.push_back(table.front());
                for (int i = 0; i + 1 < static_cast<int>(table.size()); ++i)
                    table[i] = table[i + 1] - table[i];
                table.pop_back();
            }
            for (int level = max_degree + 1; level < nd; ++level)
                if (diffs[level] != 0)
                    throw ModelBuildFailure("class size is not a degree-" +
                                            std::to_string(max_degree) + " polynomial for " +
                                            to_string(scenario_));
            diffs.resize(std::min<std::size_t>(diffs.size(), max_degree + 1));
            newton_[c] = std::move(diffs);
        }

        // Neighbor counts: affine in M, verified at every sample.
        b_const_.resize(k, k);
        b_slope_.resize(k, k);
        std::vector<Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>> bs(nd);
        for (int s = 0; s < nd; ++s) {
            const auto& counts = reds[s].quotient.counts;
            bs[s].resize(k, k);
            for (int i = 0; i < k; ++i)
                for (int j = 0; j < k; ++j)
                    bs[s](to_model[s][i], to_model[s][j]) = counts(i, j);
        }
        for (int i = 0; i < k; ++i)
            for (int j = 0; j < k; ++j) {
                const std::int64_t slope = bs[1](i, j) - bs[0](i, j); // dims consecutive
                const std::int64_t base = bs[0](i, j) - slope * dims_[0];
                for (int s = 0; s < nd; ++s)
                    if (bs[s](i, j) != base + slope * dims_[s])
                        throw ModelBuildFailure("neighbor count not affine in M at (" +
                                                std::to_string(i) + "," + std::to_string(j) +
                                                ") for " + to_string(scenario_));
                b_slope_(i, j) = slope;
                b_const_(i, j) = base;
            }

        // Scenario metadata must agree across samples once mapped.
        auto map_sorted = [&](const std::vector<int>& idx, int s) {
            std::vector<int> out;
            out.reserve(idx.size());
            for (int c : idx) out.push_back(to_model[s][c]);
            std::sort(out.begin(), out.end());
            return out;
        };
        oracle_classes_ = map_sorted(reds[0].oracle_classes, 0);
        for (int s = 1; s < nd; ++s)
            if (map_sorted(reds[s].oracle_classes, s) != oracle_classes_)
                throw ModelBuildFailure("oracle classes differ across sample dims");

        plan_ = reds[0].plan;
        for (auto& stage : plan_.stages) {
            stage.block_a = map_sorted(stage.block_a, 0);
            stage.block_b = map_sorted(stage.block_b, 0);
            stage.pruned = map_sorted(stage.pruned, 0);
            stage.target = to_model[0][stage.target];
            stage.initial = to_model[0][stage.initial];
        }
        for (int s = 1; s < nd; ++s) {
            const StagePlan& other = reds[s].plan;
            if (other.count() != plan_.count())
                throw ModelBuildFailure("stage count differs across sample dims");
            for (int st = 0; st < plan_.count(); ++st) {
                const Stage& a = plan_.stages[st];
                const Stage& b = other.stages[st];
                if (map_sorted(b.block_a, s) != a.block_a ||
                    map_sorted(b.block_b, s) != a.block_b ||
                    to_model[s][b.target] != a.target ||
                    to_model[s][b.initial] != a.initial)
                    throw ModelBuildFailure("stage plan differs across sample dims");
            }
        }

        labels_.assign(k, "");
        for (int c = 0; c < k; ++c) labels_[to_model[0][c]] = reds[0].labels[c];
    }

    static int find_local(const std::vector<int>& to_model, int model_idx) {
        for (int c = 0; c < static_cast<int>(to_model.size()); ++c)
            if (to_model[c] == model_idx) return c;
        throw ModelBuildFailure("class mapping inconsistency");
    }

    Scenario scenario_;
    std::vector<int> dims_;
    std::vector<std::vector<int>> keys_;
    std::vector<std::vector<std::int64_t>> newton_;
    Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic> b_const_, b_slope_;
    std::vector<int> oracle_classes_;
    StagePlan plan_;
    std::vector<std::string> labels_;
};

// Cached model per scenario; building one costs a handful of small-lattice
// reductions.
inline const ReducedScenarioModel& scenario_model(Scenario s) {
    static std::map<Scenario, std::unique_ptr<ReducedScenarioModel>> cache;
    static std::mutex mutex;
    std::lock_guard<std::mutex> lock(mutex);
    auto& slot = cache[s];
    if (!slot) slot = std::make_unique<ReducedScenarioModel>(s);
    return *slot;
}

// Reduction at any dimension: direct when a lattice of that size is cheap,
// through the fitted model otherwise.
inline ReducedSystem reduced_system(Scenario s, int m) {
    const int r = scenario_order(s);
    LatticeSpec probe{r, m};
    probe.validate();
    if (probe.vertex_count() <= 30000) return to_system(reduce_scenario(s, m));
    return scenario_model(s).at(m);
}

} // namespace ctqw
