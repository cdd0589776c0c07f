#pragma once

// Distribution statistics for drift profiling: Jensen-Shannon divergence
// (base-2, so disjoint support scores exactly 1) and Wasserstein-1 on
// ordinal supports with unit spacing.

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "medforge/util.hpp"

namespace medforge {

struct AxisDistribution {
    std::string axis;
    std::vector<std::string> support;   // ordered category list
    std::vector<double> probabilities;  // nonnegative, sums to 1 within 1e-9
    long n = 0;                         // sample count

    static AxisDistribution from_counts(std::string axis,
                                        const std::map<std::string, long>& counts) {
        AxisDistribution d;
        d.axis = std::move(axis);
        long total = 0;
        for (const auto& [_, c] : counts) total += c;
        if (total <= 0) throw Error("axis distribution has no samples");
        for (const auto& [category, c] : counts) {
            d.support.push_back(category);
            d.probabilities.push_back(static_cast<double>(c) / static_cast<double>(total));
        }
        d.n = total;
        return d;
    }

    void validate() const {
        if (support.size() != probabilities.size()) {
            throw Error("support/probability size mismatch");
        }
        if (support.empty()) throw Error("empty support");
        std::set<std::string> seen(support.begin(), support.end());
        if (seen.size() != support.size()) throw Error("duplicate category in support");
        double sum = 0.0;
        for (double p : probabilities) {
            if (p < 0.0) throw Error("negative probability");
            sum += p;
        }
        if (std::abs(sum - 1.0) > 1e-9) throw Error("probabilities do not sum to 1");
    }
};

namespace detail {

// Union-aligns two distributions over the sorted union of their categories,
// zero-filling absent cells. Sorted order makes jsd(p,q) == jsd(q,p) exactly.
inline std::pair<std::vector<double>, std::vector<double>> union_align(
    const AxisDistribution& p, const AxisDistribution& q) {
    p.validate();
    q.validate();
    std::set<std::string> cats(p.support.begin(), p.support.end());
    cats.insert(q.support.begin(), q.support.end());
    auto lookup = [](const AxisDistribution& d, const std::string& cat) {
        for (size_t i = 0; i < d.support.size(); ++i) {
            if (d.support[i] == cat) return d.probabilities[i];
        }
        return 0.0;
    };
    std::vector<double> pv, qv;
    for (const std::string& cat : cats) {
        pv.push_back(lookup(p, cat));
        qv.push_back(lookup(q, cat));
    }
    return {pv, qv};
}

}  // namespace detail

// Jensen-Shannon divergence, log base 2, in [0, 1]. Zero-probability cells
// contribute nothing; the mixture keeps every remaining term finite.
inline double jsd(const AxisDistribution& p, const AxisDistribution& q) {
    auto [pv, qv] = detail::union_align(p, q);
    double sum_p = 0.0, sum_q = 0.0;
    for (size_t i = 0; i < pv.size(); ++i) {
        const double m = 0.5 * (pv[i] + qv[i]);
        if (pv[i] > 0.0) sum_p += pv[i] * std::log2(pv[i] / m);
        if (qv[i] > 0.0) sum_q += qv[i] * std::log2(qv[i] / m);
    }
    double value = 0.5 * sum_p + 0.5 * sum_q;
    return std::clamp(value, 0.0, 1.0);
}

// Wasserstein-1 on a shared ordinal support with unit spacing:
// sum over gaps of |CDF_p - CDF_q|. Equals the mean shift when one
// distribution is a rightward transport of the other.
inline double wasserstein1(const AxisDistribution& p, const AxisDistribution& q) {
    p.validate();
    q.validate();
    if (p.support != q.support) throw Error("wasserstein1 requires a common ordinal support");
    double cp = 0.0, cq = 0.0, total = 0.0;
    for (size_t i = 0; i + 1 < p.support.size(); ++i) {
        cp += p.probabilities[i];
        cq += q.probabilities[i];
        total += std::abs(cp - cq);
    }
    return total;
}

// Mean of a numeric ordinal support (categories parse as numbers).
inline double ordinal_mean(const AxisDistribution& d) {
    d.validate();
    double mean = 0.0;
    for (size_t i = 0; i < d.support.size(); ++i) {
        mean += std::stod(d.support[i]) * d.probabilities[i];
    }
    return mean;
}

}  // namespace medforge
