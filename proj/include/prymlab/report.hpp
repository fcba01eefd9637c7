#pragma once

#include "linalg.hpp"

#include <limits>
#include <string>
#include <vector>

namespace prymlab {

struct ResidualSample {
    int n = 0, m = 0, nu = 0;
    CVec Z;
    double residual = 0.0;
};

// Residual statistics of one verified identity. pass <=> max_rel_residual <= tolerance.
struct IdentityReport {
    std::string identity;
    double tolerance = 0.0;
    double max_rel_residual = 0.0;
    double mean_rel_residual = 0.0;
    bool pass = false;
    std::string note;
    std::vector<ResidualSample> samples;

    std::size_t sample_count() const { return samples.size(); }

    void add(int n, int m, int nu, const CVec& Z, double r) { samples.push_back({n, m, nu, Z, r}); }

    // Statistics in sample order, so the result does not depend on how samples were produced.
    IdentityReport& finish() {
        max_rel_residual = 0.0;
        double sum = 0.0;
        bool finite = true;
        for (const auto& s : samples) {
            if (!std::isfinite(s.residual)) finite = false;
            max_rel_residual = std::max(max_rel_residual, s.residual);
            sum += s.residual;
        }
        mean_rel_residual = samples.empty() ? 0.0 : sum / double(samples.size());
        if (!finite) max_rel_residual = mean_rel_residual = std::numeric_limits<double>::infinity();
        pass = !samples.empty() && finite && max_rel_residual <= tolerance;
        return *this;
    }
};

// |sum of terms| relative to the largest term.
inline double relative_residual(std::initializer_list<cplx> terms) {
    cplx s{0.0, 0.0};
    double big = 0.0;
    for (auto t : terms) {
        s += t;
        big = std::max(big, std::abs(t));
    }
    return big > 0.0 ? std::abs(s) / big : 0.0;
}

} // namespace prymlab
