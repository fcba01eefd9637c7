#include <prymlab/identity.hpp>

#include <algorithm>

namespace prymlab {

std::array<CVec, 2> secant_coefficients(const SchroedingerConstants& k) {
    return {cvec({k.w1 * k.w2 * k.c1 * k.c2, -k.c3 * k.w1 * k.w3 * k.c1, k.c3 * k.w2 * k.w3 * k.c2, -1.0}),
            cvec({k.w1 * k.w2 / (k.c1 * k.c2), -k.c3 * k.w1 / (k.w3 * k.c1), k.c3 * k.w2 / (k.w3 * k.c2), -1.0})};
}

CVec a_coefficients(const SchroedingerConstants& k, int nu) {
    const cplx base = psi_prefactor(k, 0, 0, nu);
    const cplx C = potential_prefactor(k, 0, 0, nu);
    return cvec({psi_prefactor(k, 1, 1, nu) / base, -C * psi_prefactor(k, 1, 0, 1 - nu) / base,
                 C * psi_prefactor(k, 0, 1, 1 - nu) / base, -1.0});
}

std::array<CVec, 4> secant_points(const PrymFrame& f, int sign) {
    const double s = sign;
    return {0.5 * (f.A + f.U + f.V - s * f.W), 0.5 * (f.A + f.U - f.V + s * f.W),
            0.5 * (f.A + f.V - f.U + s * f.W), 0.5 * (f.A - f.U - f.V - s * f.W)};
}

double largest_normalized_minor(const CMat& K) {
    const int dim = static_cast<int>(K.rows());
    if (dim < 4) return 0.0;
    CMat rows = K.transpose(); // 4 x 2^g
    for (int i = 0; i < 4; ++i) rows.row(i) /= rows.row(i).cwiseAbs().maxCoeff();
    double best = 0.0;
    std::vector<int> pick{0, 1, 2, 3};
    // all increasing 4-subsets of the columns
    for (;;) {
        CMat S(4, 4);
        for (int j = 0; j < 4; ++j) S.col(j) = rows.col(pick[j]);
        best = std::max(best, std::abs(S.determinant()));
        int i = 3;
        while (i >= 0 && pick[i] == dim - 4 + i) --i;
        if (i < 0) break;
        ++pick[i];
        for (int j = i + 1; j < 4; ++j) pick[j] = pick[j - 1] + 1;
    }
    return best;
}

SecantSystem secant_system(const PrymFrame& f, int sign, double null_threshold) {
    const auto B2 = doubled(f.Pi);
    const auto pts = secant_points(f, sign);
    SecantSystem s;
    s.kummer.resize(1 << f.g(), 4);
    RVec norms(4);
    for (int j = 0; j < 4; ++j) {
        s.kummer.col(j) = kummer(B2, pts[j], f.policy).components;
        norms[j] = s.kummer.col(j).norm();
    }
    CMat Kn = s.kummer;
    for (int j = 0; j < 4; ++j) Kn.col(j) /= norms[j];
    Eigen::JacobiSVD<CMat> svd(Kn, Eigen::ComputeFullV);
    s.singular_values = svd.singularValues();
    int rank = 0;
    for (Eigen::Index i = 0; i < s.singular_values.size(); ++i)
        if (s.singular_values[i] > null_threshold * s.singular_values[0]) ++rank;
    rank = std::min(rank, 3); // keep at least the direction of the smallest singular value
    s.null_basis = svd.matrixV().rightCols(4 - rank);
    for (int j = 0; j < 4; ++j) s.null_basis.row(j) /= norms[j];
    s.largest_minor = largest_normalized_minor(s.kummer);
    return s;
}


AProbe::AProbe(const PrymFrame& f, const IndexWindow& w, const std::vector<CVec>& Zs) {
    std::vector<CVec> r[2];
    for (const auto& Z0 : Zs) {
        for (int n = w.n_lo; n <= w.n_hi; ++n)
            for (int m = w.m_lo; m <= w.m_hi; ++m) {
                CVec Z = Z0;
                const auto row = with_resample(f.Pi, Z, 1000u + 31u * n + m, [&](const CVec& z) {
                    const cplx u = u_bare(f, {n, m}, z);
                    return cvec({psi_bare(f, f.A, {n + 1, m + 1}, z), u * psi_bare(f, f.A, {n + 1, m}, z),
                                 u * psi_bare(f, f.A, {n, m + 1}, z), psi_bare(f, f.A, {n, m}, z)});
                });
                r[f.nu_of(LatticeIndex(n, m))].push_back(row);
            }
    }
    for (int nu = 0; nu < 2; ++nu) {
        rows_[nu].resize(static_cast<Eigen::Index>(r[nu].size()), 4);
        for (std::size_t i = 0; i < r[nu].size(); ++i) rows_[nu].row(i) = r[nu][i].transpose();
    }
}

double AProbe::residual_for(const CVec& x, int nu) const {
    double worst = 0.0;
    const CMat& R = rows_[nu];
    for (Eigen::Index i = 0; i < R.rows(); ++i)
        worst = std::max(worst, relative_residual({R(i, 0) * x[0], R(i, 1) * x[1], R(i, 2) * x[2], R(i, 3) * x[3]}));
    return worst;
}

double AProbe::residual(const SchroedingerConstants& k) const {
    return std::max(residual_for(a_coefficients(k, 0), 0), residual_for(a_coefficients(k, 1), 1));
}

double coefficient_mismatch(const SchroedingerConstants& a, const SchroedingerConstants& b) {
    const auto x = secant_coefficients(a), y = secant_coefficients(b);
    double worst = 0.0;
    for (int s = 0; s < 2; ++s)
        for (int i = 0; i < 3; ++i) worst = std::max(worst, std::abs(x[s][i] - y[s][i]) / std::abs(y[s][i]));
    return worst;
}

namespace {

// Rows: log K1+, log K2+, log K3+, log K1-, log K2-, log K3-; columns: log c1, c2, c3, w1, w2, w3.
RMat log_linear_matrix() {
    RMat M(6, 6);
    M << 1, 1, 0, 1, 1, 0,   //
        1, 0, 1, 1, 0, 1,    //
        0, 1, 1, 0, 1, 1,    //
        -1, -1, 0, 1, 1, 0,  //
        -1, 0, 1, 1, 0, -1,  //
        0, -1, 1, 0, 1, -1;
    return M;
}

} // namespace

SchroedingerConstants recover_constants(const std::array<CVec, 2>& null_vectors,
                                        const std::function<double(const SchroedingerConstants&)>& probe,
                                        RecoveryInfo* info, double tolerance) {
    CVec L(6);
    SchroedingerConstants target;
    for (int s = 0; s < 2; ++s) {
        const CVec& v = null_vectors[s];
        if (v.size() != 4) throw Error(Errc::ZeroCoefficient, "null vector must have four entries");
        const double big = max_abs(v);
        for (int i = 0; i < 4; ++i)
            if (!(std::abs(v[i]) > 1e-14 * big))
                throw Error(Errc::ZeroCoefficient, "secant coefficient " + std::to_string(i) + " vanishes");
        const CVec x = v / (-v[3]);
        L[3 * s + 0] = std::log(x[0]);
        L[3 * s + 1] = std::log(-x[1]);
        L[3 * s + 2] = std::log(x[2]);
    }
    const RMat M = log_linear_matrix();
    const Eigen::ColPivHouseholderQR<RMat> qr(M);
    auto solve = [&](const CVec& rhs) {
        const RVec re = qr.solve(RVec(rhs.real())), im = qr.solve(RVec(rhs.imag()));
        CVec y(6);
        for (int i = 0; i < 6; ++i) y[i] = cplx(re[i], im[i]);
        SchroedingerConstants k;
        k.c1 = std::exp(y[0]), k.c2 = std::exp(y[1]), k.c3 = std::exp(y[2]);
        k.w1 = std::exp(y[3]), k.w2 = std::exp(y[4]), k.w3 = std::exp(y[5]);
        return k;
    };
    // coefficients the constants must reproduce
    auto mismatch = [&](const SchroedingerConstants& k) {
        const auto c = secant_coefficients(k);
        double worst = 0.0;
        for (int s = 0; s < 2; ++s) {
            const CVec x = null_vectors[s] / (-null_vectors[s][3]);
            for (int i = 0; i < 3; ++i) worst = std::max(worst, std::abs(c[s][i] - x[i]) / std::abs(x[i]));
        }
        return worst;
    };

    SchroedingerConstants best;
    RecoveryInfo bi;
    bool have = false;
    for (int branch = 0; branch < 64; ++branch) {
        CVec shift = CVec::Zero(6);
        for (int i = 0; i < 6; ++i)
            if (branch >> i & 1) shift[i] = 2.0 * pi * I;
        const auto k = solve(L + shift);
        RecoveryInfo ri{mismatch(k), probe ? probe(k) : 0.0, branch};
        const bool better = !have || ri.coefficient_residual < 0.5 * bi.coefficient_residual ||
                            (probe && ri.coefficient_residual <= tolerance &&
                             ri.probe_residual < 0.5 * bi.probe_residual);
        if (better) {
            best = k;
            bi = ri;
            have = true;
        }
        if (!probe) break; // without a probe every branch scores alike; keep the principal one
    }
    if (info) *info = bi;
    if (bi.coefficient_residual > tolerance)
        throw Error(Errc::InconsistentSystem,
                    "log-linear system residual " + std::to_string(bi.coefficient_residual));
    if (probe && bi.probe_residual > tolerance)
        throw Error(Errc::InconsistentSystem,
                    "no branch makes (A) hold: probe residual " + std::to_string(bi.probe_residual));
    return best;
}

namespace {

// Coefficient vector in span(N) with x[3] = -1 minimizing the row-normalized residual of R x.
CVec constrained_fit(const CMat& R, const CMat& N) {
    CMat Rn = R;
    for (Eigen::Index i = 0; i < Rn.rows(); ++i) Rn.row(i) /= Rn.row(i).cwiseAbs().maxCoeff();
    const Eigen::Index d = N.cols();
    const CMat r = N.row(3);
    const double rr = r.squaredNorm();
    if (!(rr > 0.0)) throw Error(Errc::DegenerateQuadruple, "null space has no last-coefficient component");
    const CVec a0 = -r.adjoint() / rr;
    if (d == 1) return N * a0;
    Eigen::JacobiSVD<CMat> svd(r, Eigen::ComputeFullV);
    const CMat Q = svd.matrixV().rightCols(d - 1);
    const CMat G = Rn * N * Q;
    const CVec b = G.colPivHouseholderQr().solve(-Rn * N * a0);
    CVec x = N * (a0 + Q * b);
    x /= -x[3];
    return x;
}

double secant_relation_residual(const CMat& kummer, const CVec& x) {
    CVec sum = CVec::Zero(kummer.rows());
    double big = 0.0;
    for (int j = 0; j < 4; ++j) {
        sum += x[j] * kummer.col(j);
        big = std::max(big, max_abs(x[j] * kummer.col(j)));
    }
    return max_abs(sum) / big;
}

// Unconstrained fit of (K1, -K2, K3) with the fourth entry pinned to -1.
CVec plain_fit(const CMat& R) {
    CMat Rn = R;
    for (Eigen::Index i = 0; i < Rn.rows(); ++i) Rn.row(i) /= Rn.row(i).cwiseAbs().maxCoeff();
    const CVec y = Rn.leftCols(3).colPivHouseholderQr().solve(CVec(Rn.col(3)));
    return cvec({y[0], y[1], y[2], -1.0});
}

} // namespace

ConstantFit fit_constants(const PrymData& d, const FitOptions& opt) {
    const auto Zs = sample_Zs(d.Pi, opt.probe_samples, opt.seed);
    struct Trial {
        double res;
        std::array<CVec, 2> x;
        int dims[2];
        double discrepancy;
    };
    std::vector<Trial> trials;
    std::array<std::unique_ptr<AProbe>, 2> probes;
    for (int t = 0; t < 4; ++t) {
        const double sw = t < 2 ? 1.0 : -1.0;
        const bool even_up = t % 2 == 0;
        const PrymFrame f(d, sw, opt.policy);
        if (t % 2 == 0) probes[t / 2] = std::make_unique<AProbe>(f, opt.probe_window, Zs);
        const AProbe& probe = *probes[t / 2];
        const SecantSystem sys[2] = {secant_system(f, +1, opt.null_threshold), secant_system(f, -1, opt.null_threshold)};
        Trial tr{};
        for (int nu = 0; nu < 2; ++nu) {
            const SecantSystem& s = sys[(nu == 0) == even_up ? 0 : 1];
            tr.dims[nu] = static_cast<int>(s.null_basis.cols());
            tr.x[nu] = constrained_fit(probe.rows(nu), s.null_basis);
            tr.res = std::max(tr.res, probe.residual_for(tr.x[nu], nu));
            // the unconstrained route must land in the secant null space on its own
            const CVec p = plain_fit(probe.rows(nu));
            tr.discrepancy = std::max(tr.discrepancy, secant_relation_residual(s.kummer, p));
        }
        trials.push_back(tr);
    }
    // earlier trials win near-ties: +W before -W, even/upper before even/lower
    int pick = 0;
    for (int t = 1; t < 4; ++t)
        if (trials[t].res < 0.1 * trials[pick].res) pick = t;

    ConstantFit fit;
    for (int t = 0; t < 4; ++t) fit.trial_residuals[t] = trials[t].res;
    fit.w_sign = pick < 2 ? 1.0 : -1.0;
    fit.even_is_upper = pick % 2 == 0;
    fit.coefficients = trials[pick].x;
    fit.probe_residual = trials[pick].res;
    fit.plain_fit_discrepancy = trials[pick].discrepancy;
    fit.null_dimension[0] = trials[pick].dims[0];
    fit.null_dimension[1] = trials[pick].dims[1];
    const AProbe& probe = *probes[pick / 2];
    fit.constants = recover_constants(
        fit.coefficients, [&](const SchroedingerConstants& k) { return probe.residual(k); }, &fit.recovery,
        opt.tolerance);
    return fit;
}

} // namespace prymlab
