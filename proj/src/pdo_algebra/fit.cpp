#include <prymlab/pdo.hpp>

#include <algorithm>

namespace prymlab {

ThetaDerivativeFit theta_derivative_fit(const std::vector<ThetaDerivativeSample>& samples) {
    if (samples.empty()) throw Error(Errc::RankDeficientFit, "no samples");
    const Eigen::Index g = samples.front().gradient.size();
    std::map<int, Eigen::Index> column; // groups in order of first appearance
    for (const auto& s : samples) {
        if (s.gradient.size() != g) throw std::invalid_argument("samples with gradients of different sizes");
        column.try_emplace(s.group, Eigen::Index(column.size()));
    }
    std::vector<int> order(column.size());
    for (const auto& [grp, c] : column) order[std::size_t(c)] = grp;
    const bool parity = std::any_of(samples.begin(), samples.end(), [](const ThetaDerivativeSample& s) { return s.parity != 0; });
    const Eigen::Index G = Eigen::Index(column.size()) + (parity ? 1 : 0), rows = Eigen::Index(samples.size()),
                       cols = G + g;
    if (rows < cols) throw Error(Errc::RankDeficientFit, "fewer samples than unknowns");

    CMat A = CMat::Zero(rows, cols);
    CVec b(rows);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const auto& s = samples[std::size_t(r)];
        A(r, column.at(s.group)) = 1.0;
        if (parity && s.parity != 0) A(r, G - 1) = 1.0;
        A.row(r).tail(g) = s.gradient.transpose();
        b[r] = s.F;
    }
    // equilibrate the columns so the rank test does not depend on the scale of the gradients
    RVec norms(cols);
    for (Eigen::Index c = 0; c < cols; ++c) {
        norms[c] = A.col(c).norm();
        if (norms[c] == 0.0) throw Error(Errc::RankDeficientFit, "a fit direction never appears in the samples");
        A.col(c) /= norms[c];
    }
    Eigen::JacobiSVD<CMat> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const RVec& sv = svd.singularValues();
    if (sv[cols - 1] < 1e-10 * sv[0]) throw Error(Errc::RankDeficientFit, "design matrix is numerically rank deficient");
    CVec x = svd.solve(b);
    const CVec misfit = A * x - b;
    for (Eigen::Index c = 0; c < cols; ++c) x[c] /= norms[c];

    ThetaDerivativeFit fit;
    fit.samples = int(rows);
    fit.offsets.assign(x.data(), x.data() + Eigen::Index(order.size()));
    if (parity) fit.parity_offset = x[G - 1];
    fit.groups = order;
    fit.direction = x.tail(g);
    const double scale = std::max(max_abs(b), 1e-300);
    fit.residual = max_abs(misfit) / scale;
    for (Eigen::Index r = 0; r < rows; ++r) fit.misfits.push_back(std::abs(misfit[r]) / scale);
    return fit;
}

PrymTauGrid prym_tau_grid(const PrymFrame& f, const SchroedingerConstants& k, const CVec& Z, const Window& w) {
    const cplx L1 = std::log(k.c1), L2 = std::log(k.c2);
    const Eigen::Index sites = Eigen::Index(w.n_size()) * w.m_size();
    std::vector<cplx> logs;
    logs.reserve(std::size_t(sites));
    RMat A(sites, 6);
    RVec y(sites);
    for (int n = w.n_lo; n <= w.n_hi; ++n)
        for (int m = w.m_lo; m <= w.m_hi; ++m) {
            const int nu = f.nu_of(LatticeIndex(n, m));
            const cplx lt = log_theta(f.Pi, f.shift(n, m) + double(1 - nu) * f.W + Z, f.policy) +
                            (nu - 0.5) * (double(m) * L1 + double(n) * L2);
            const Eigen::Index r = Eigen::Index(logs.size());
            const double dn = n, dm = m;
            A.row(r) << dn * dn, dn * dm, dm * dm, dn, dm, 1.0;
            y[r] = lt.real();
            logs.push_back(lt);
        }
    // quadratic gauge fitted to ln|tau|; it only rescales C and v0 by constants
    const RVec q = A.colPivHouseholderQr().solve(y);
    PrymTauGrid out{ComplexGrid(w), k.c3 * std::exp(-q[1]), std::exp(2.0 * q[0])};
    std::size_t r = 0;
    for (int n = w.n_lo; n <= w.n_hi; ++n)
        for (int m = w.m_lo; m <= w.m_hi; ++m, ++r) out.tau.ref(n, m) = std::exp(logs[r] - A.row(Eigen::Index(r)).dot(q));
    return out;
}

CVec log_tau_gradient_difference(const PrymFrame& f, int n, int m, const CVec& Z) {
    const int nu = f.nu_of(LatticeIndex(n, m));
    const auto a = theta_with_gradient(f.Pi, f.shift(n, m) + double(1 - nu) * f.W + Z, f.policy);
    const auto b = theta_with_gradient(f.Pi, f.shift(n + 1, m) + double(nu) * f.W + Z, f.policy);
    return a.log_grad - b.log_grad;
}

std::vector<ThetaDerivativeSample> theta_derivative_samples(const PrymFrame& f, const SchroedingerConstants& k, const std::vector<CVec>& Zs,
                                      const Window& w, int s_max) {
    std::vector<ThetaDerivativeSample> out;
    int group = 0;
    for (const CVec& Z : Zs) {
        const PrymTauGrid pg = prym_tau_grid(f, k, Z, w);
        const LaxPair lp = solve_lax_operator(pg.tau, pg.C, s_max);
        // the recursion is linear in L, so the gauge factor of v0 scales F~ as a whole
        const ComplexGrid F = pg.v0_factor * f_tilde(build_Lj(lp.L, 1).f);
        const Window& fw = F.window();
        for (int n = fw.n_lo; n <= fw.n_hi; ++n, ++group)
            for (int m = fw.m_lo; m <= fw.m_hi; ++m)
                out.push_back({F(n, m), log_tau_gradient_difference(f, n, m, Z), group, f.nu_of(LatticeIndex(n, m)), n, m, Z});
    }
    return out;
}

} // namespace prymlab
