#include <prymlab/identity.hpp>

#include <algorithm>

namespace prymlab {

IdentityReport verify_A(const PrymFrame& f, const SchroedingerConstants& k, const IndexWindow& w,
                        std::vector<CVec> Zs, double tolerance) {
    IdentityReport rep;
    rep.identity = "A";
    rep.tolerance = tolerance;
    for (std::size_t s = 0; s < Zs.size(); ++s)
        for (int n = w.n_lo; n <= w.n_hi; ++n)
            for (int m = w.m_lo; m <= w.m_hi; ++m) {
                CVec& Z = Zs[s];
                const double r = with_resample(f.Pi, Z, 4000u + 97u * s, [&](const CVec& z) {
                    const cplx u = u_field(f, k, {n, m}, z);
                    return relative_residual({psi_field(f, k, {n + 1, m + 1}, z), -u * psi_field(f, k, {n + 1, m}, z),
                                              u * psi_field(f, k, {n, m + 1}, z), -psi_field(f, k, {n, m}, z)});
                });
                rep.add(n, m, f.nu_of(LatticeIndex(n, m)), Z, r);
            }
    return rep.finish();
}

IdentityReport verify_B(const PrymFrame& f, const SchroedingerConstants* k, const BOptions& opt) {
    IdentityReport rep;
    rep.identity = "B";
    rep.tolerance = opt.tolerance;
    const auto coeffs = k ? secant_coefficients(*k) : std::array<CVec, 2>{};
    for (int si = 0; si < 2; ++si) {
        const int sign = si == 0 ? +1 : -1;
        const auto pts = secant_points(f, sign);
        for (int i = 0; i < 4; ++i)
            for (int j = i + 1; j < 4; ++j)
                if (lattice_distance(f.Pi, pts[i] - pts[j]) < 1e-8)
                    throw Error(Errc::DegenerateQuadruple, "secancy points " + std::to_string(i) + " and " +
                                                               std::to_string(j) + " coincide mod the lattice");
        const SecantSystem sys = secant_system(f, sign);
        if (f.g() >= 2) rep.add(0, 0, si, CVec(), sys.largest_minor);
        if (k) {
            // parity 0 coefficients belong to the upper quadruple unless the pairing is swapped
            const CVec& x = coeffs[(si == 0) == opt.even_is_upper ? 0 : 1];
            CVec sum = CVec::Zero(sys.kummer.rows());
            double big = 0.0;
            for (int j = 0; j < 4; ++j) {
                sum += x[j] * sys.kummer.col(j);
                big = std::max(big, max_abs(x[j] * sys.kummer.col(j)));
            }
            rep.add(1, 0, si, CVec(), max_abs(sum) / big);
        }
    }
    if (f.g() < 2) rep.note = "structural check only: four points in C^2 are always dependent";
    return rep.finish();
}

std::vector<DivisorPoint> divisor_points(const PeriodMatrix& Pi, int count, std::uint64_t seed, const ThetaPolicy& pol) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    std::vector<DivisorPoint> out;
    for (int attempt = 0; int(out.size()) < count; ++attempt) {
        if (attempt > 50 * count) throw Error(Errc::NoConvergence, "could not collect enough theta-divisor points");
        const CVec z0 = sample_Z(Pi, rng);
        CVec dir(Pi.g());
        for (int i = 0; i < Pi.g(); ++i) dir[i] = cplx(nd(rng), nd(rng));
        dir /= dir.norm();
        DivisorPoint p;
        try {
            p = find_theta_zero(Pi, z0, dir, pol);
        } catch (const Error& e) {
            if (e.code() != Errc::NoConvergence) throw;
            continue;
        }
        bool close = false;
        for (const auto& q : out) close = close || (p.z - q.z).norm() < 1e-3;
        if (!close) out.push_back(p);
    }
    return out;
}

namespace {

struct CmTerms {
    cplx t1, t2, t3, t4;
};

// The four products of the three-term relation: t1 + t2 = t3 + t4 on the divisor.
CmTerms cm_terms(const PrymFrame& f, const SchroedingerConstants& k, const CVec& Z, int sign) {
    const double s = sign;
    const CVec &U = f.U, &V = f.V, &W = f.W;
    const cplx c1 = ipow(k.c1, -2 * sign), c2 = ipow(k.c2, -2 * sign), c3 = k.c3 * k.c3;
    return {c1 * c3 * f.th(Z + U - V) * f.th(Z - U + s * W) * f.th(Z + V + s * W),
            c2 * c3 * f.th(Z - U + V) * f.th(Z + U + s * W) * f.th(Z - V + s * W),
            c1 * c2 * f.th(Z - U - V) * f.th(Z + U + s * W) * f.th(Z + V + s * W),
            f.th(Z + U + V) * f.th(Z - U + s * W) * f.th(Z - V + s * W)};
}

// Bracket of the fourth-order identity for the point P whose wave function carries w1, w2. At the
// point W itself the weights are w1 = 1/c2, w2 = 1/c1 and the bracket loses its w-dependence.
std::array<cplx, 4> quad_bracket(const PrymFrame& f, const SchroedingerConstants& k, const CVec& P, cplx w1, cplx w2,
                                 const CVec& Z) {
    const CVec &U = f.U, &V = f.V;
    const cplx c12 = k.c1 * k.c2, c3 = k.c3 * k.c3;
    const cplx e = c12 * w1 * w2, a = c12 * c3 * w1 / w2, b = c12 * c3 * w2 / w1, d = c12 / (w1 * w2);
    return {e * f.th(P + U + V + Z) * f.th(Z - U) * f.th(Z - V), -a * f.th(P + U - V + Z) * f.th(Z - U) * f.th(Z + V),
            -b * f.th(P - U + V + Z) * f.th(Z + U) * f.th(Z - V), d * f.th(P - U - V + Z) * f.th(Z + U) * f.th(Z + V)};
}

} // namespace

double c_residual(const PrymFrame& f, const SchroedingerConstants& k, const CVec& Z, int sign) {
    const auto t = cm_terms(f, k, Z, sign);
    return relative_residual({t.t1, t.t2, -t.t3, -t.t4});
}

double c_residual_rearranged(const PrymFrame& f, const SchroedingerConstants& k, const CVec& Z) {
    // the tau equation at n = 0, nu = 0 on tau_0^0(z) = 0, i.e. z = Z - W
    return tau_equation_residual(prym_tau_model(f, k), 0, 0, Z - f.W);
}

IdentityReport verify_C(const PrymFrame& f, const SchroedingerConstants& k, const std::vector<DivisorPoint>& pts,
                        double tolerance) {
    IdentityReport rep;
    rep.identity = "C";
    rep.tolerance = tolerance;
    for (const auto& p : pts)
        for (int si = 0; si < 2; ++si) rep.add(0, 0, si, p.z, c_residual(f, k, p.z, si == 0 ? +1 : -1));
    return rep.finish();
}

double quad_residual(const PrymFrame& f, const SchroedingerConstants& k, const CVec& Z,
                     const SchroedingerConstants* w_side) {
    const auto a = quad_bracket(f, k, f.A, k.w1, k.w2, Z);
    const auto w = w_side ? quad_bracket(f, k, f.W, w_side->w1, w_side->w2, Z)
                          : quad_bracket(f, k, f.W, 1.0 / k.c2, 1.0 / k.c1, Z);
    const cplx tw = f.th(Z + f.W), ta = f.th(Z + f.A);
    return relative_residual({tw * a[0], tw * a[1], tw * a[2], tw * a[3], -ta * w[0], -ta * w[1], -ta * w[2], -ta * w[3]});
}

double quad_w_bracket_residual(const PrymFrame& f, const SchroedingerConstants& k, const CVec& Z) {
    const auto w = quad_bracket(f, k, f.W, 1.0 / k.c2, 1.0 / k.c1, Z);
    return relative_residual({w[0], w[1], w[2], w[3]});
}

IdentityReport verify_quad(const PrymFrame& f, const SchroedingerConstants& k, std::vector<CVec> Zs,
                           double tolerance) {
    IdentityReport rep;
    rep.identity = "quad";
    rep.tolerance = tolerance;
    for (const auto& Z : Zs) rep.add(0, 0, 0, Z, quad_residual(f, k, Z));
    return rep.finish();
}

FiveTermCoefficients five_term_coefficients(const PrymFrame& f, const SchroedingerConstants& k, int n, int m,
                                            const CVec& Z) {
    const CVec Zs = Z + f.shift(n, m);
    const CVec &U = f.U, &V = f.V, &W = f.W;
    const cplx c1 = k.c1 * k.c1, c2 = k.c2 * k.c2, c3 = k.c3 * k.c3;
    const cplx pU = f.th(Zs + U), mU = f.th(Zs - U), pV = f.th(Zs + V), mV = f.th(Zs - V);
    const cplx top = f.th(Zs + U + V + W);
    const cplx ta = f.th(Zs + U - V + W), tb = f.th(Zs - U + V + W), tc = f.th(Zs - U - V + W);
    double big = 0.0;
    for (cplx t : {pU, mU, pV, mV, top, ta, tb, tc}) big = std::max(big, std::abs(t));
    for (cplx t : {mU, mV, top})
        if (!(std::abs(t) > 1e-12 * big)) throw Error(Errc::NearDivisor, "five-term coefficients: Z too close to a divisor");
    FiveTermCoefficients c;
    c.a = c1 * c3 * pV * ta / (mV * top);
    c.b = c2 * c3 * pU * tb / (mU * top);
    c.c = c1 * c2 * pU * pV * tc / (mU * mV * top);
    c.d = 1.0 - c.a - c.b + c.c;
    return c;
}

double five_term_residual(const PrymFrame& f, const CVec& A, const SchroedingerConstants& k, int n, int m,
                          const CVec& Z) {
    // the coefficients use f's constants only through c1, c2, c3
    const auto c = five_term_coefficients(f, k, n, m, Z);
    auto psi = [&](int i, int j) { return psi_field_at(f, A, k, {i, j}, Z); };
    return relative_residual({psi(n + 1, m + 1), -c.a * psi(n + 1, m - 1), -c.b * psi(n - 1, m + 1),
                              c.c * psi(n - 1, m - 1), -c.d * psi(n, m)});
}

IdentityReport verify_five_term(const PrymFrame& f, const SchroedingerConstants& k, const IndexWindow& w,
                                std::vector<CVec> Zs, double tolerance) {
    IdentityReport rep;
    rep.identity = "five_term";
    rep.tolerance = tolerance;
    for (std::size_t s = 0; s < Zs.size(); ++s)
        for (int n = w.n_lo; n <= w.n_hi; ++n)
            for (int m = w.m_lo; m <= w.m_hi; ++m) {
                if (f.nu_of(LatticeIndex(n, m)) != 0) continue;
                CVec& Z = Zs[s];
                const double r = with_resample(f.Pi, Z, 7000u + 97u * s,
                                               [&](const CVec& z) { return five_term_residual(f, f.A, k, n, m, z); });
                rep.add(n, m, 0, Z, r);
            }
    return rep.finish();
}

std::array<SchroedingerConstants, 2> shared_constants(const PrymFrame& first, const PrymFrame& second,
                                                      const SchroedingerConstants& start, const FitOptions& opt) {
    // normalized probe rows per point and parity
    CMat R[2][2];
    const PrymFrame* frames[2] = {&first, &second};
    for (int p = 0; p < 2; ++p) {
        const AProbe probe(*frames[p], opt.probe_window, sample_Zs(frames[p]->Pi, opt.probe_samples, opt.seed));
        for (int nu = 0; nu < 2; ++nu) {
            R[p][nu] = probe.rows(nu);
            for (Eigen::Index i = 0; i < R[p][nu].rows(); ++i) R[p][nu].row(i) /= R[p][nu].row(i).cwiseAbs().maxCoeff();
        }
    }
    // exponents of (c1, c2, c3, w1, w2, w3) in K1, K2, K3 per parity
    static const int expo[2][3][6] = {{{1, 1, 0, 1, 1, 0}, {1, 0, 1, 1, 0, 1}, {0, 1, 1, 0, 1, 1}},
                                      {{-1, -1, 0, 1, 1, 0}, {-1, 0, 1, 1, 0, -1}, {0, -1, 1, 0, 1, -1}}};
    // unknowns: log c1, c2, c3, then log w1, w2, w3 of each point
    auto constants = [](const CVec& y, int p) {
        SchroedingerConstants k;
        k.c1 = std::exp(y[0]), k.c2 = std::exp(y[1]), k.c3 = std::exp(y[2]);
        k.w1 = std::exp(y[3 + 3 * p]), k.w2 = std::exp(y[4 + 3 * p]), k.w3 = std::exp(y[5 + 3 * p]);
        return k;
    };
    Eigen::Index rows = 0;
    for (int p = 0; p < 2; ++p) rows += R[p][0].rows() + R[p][1].rows();
    auto residual = [&](const CVec& y, CMat* J) {
        CVec r(rows);
        if (J) J->setZero(rows, 9);
        Eigen::Index off = 0;
        for (int p = 0; p < 2; ++p) {
            const auto x = secant_coefficients(constants(y, p));
            for (int nu = 0; nu < 2; ++nu) {
                const CMat& M = R[p][nu];
                r.segment(off, M.rows()) = M * x[nu];
                if (J)
                    for (int i = 0; i < 3; ++i)
                        for (int j = 0; j < 6; ++j) {
                            if (!expo[nu][i][j]) continue;
                            const int col = j < 3 ? j : j + 3 * p;
                            J->block(off, col, M.rows(), 1) += double(expo[nu][i][j]) * x[nu][i] * M.col(i);
                        }
                off += M.rows();
            }
        }
        return r;
    };

    CVec y(9);
    y << std::log(start.c1), std::log(start.c2), std::log(start.c3), std::log(start.w1), std::log(start.w2),
        std::log(start.w3), std::log(start.w1), std::log(start.w2), std::log(start.w3);
    double lambda = 1e-3;
    for (int it = 0; it < 500; ++it) {
        CMat J;
        const CVec r = residual(y, &J);
        const double r0 = r.norm();
        if (r0 < 1e-15) break;
        const CMat JH = J.adjoint();
        const CMat N = JH * J;
        bool moved = false;
        for (int tries = 0; tries < 20 && !moved; ++tries) {
            CMat D = N;
            for (int j = 0; j < 9; ++j) D(j, j) += lambda * std::max(1e-300, std::abs(N(j, j)));
            const CVec step = D.ldlt().solve(-JH * r);
            if (residual(y + step, nullptr).norm() < r0) {
                y += step;
                lambda = std::max(1e-12, lambda * 0.3);
                moved = true;
            } else {
                lambda *= 10.0;
            }
        }
        if (!moved) break;
    }
    std::array<SchroedingerConstants, 2> out{constants(y, 0), constants(y, 1)};
    for (int p = 0; p < 2; ++p) {
        double worst = 0.0;
        for (int nu = 0; nu < 2; ++nu) {
            const CVec x = a_coefficients(out[p], nu);
            const CMat& M = R[p][nu];
            for (Eigen::Index i = 0; i < M.rows(); ++i)
                worst = std::max(worst, relative_residual({M(i, 0) * x[0], M(i, 1) * x[1], M(i, 2) * x[2], M(i, 3) * x[3]}));
        }
        if (worst > opt.tolerance)
            throw Error(Errc::InconsistentSystem,
                        "no shared c-constants make (A) hold at both points: residual " + std::to_string(worst));
    }
    return out;
}

} // namespace prymlab
