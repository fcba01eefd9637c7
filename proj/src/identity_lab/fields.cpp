#include <prymlab/identity.hpp>

namespace prymlab {

cplx ipow(cplx z, long long k) {
    if (k < 0) return 1.0 / ipow(z, -k);
    cplx r{1.0, 0.0};
    while (k > 0) {
        if (k & 1) r *= z;
        z *= z;
        k >>= 1;
    }
    return r;
}

cplx psi_prefactor(const SchroedingerConstants& k, int n, int m, int nu) {
    const int e = 1 - 2 * nu;
    return ipow(k.w1, n) * ipow(k.w2, m) * ipow(k.w3, nu) * ipow(ipow(k.c1, m) * ipow(k.c2, n), e);
}

cplx potential_prefactor(const SchroedingerConstants& k, int n, int m, int nu) {
    const int e = 1 - 2 * nu;
    return k.c3 * ipow(ipow(k.c2, 2LL * n + 1) * ipow(k.c1, 2LL * m + 1), e);
}

namespace {

void guard(std::initializer_list<cplx> all, std::initializer_list<cplx> denominators, const char* what) {
    double big = 0.0;
    for (auto t : all) big = std::max(big, std::abs(t));
    for (auto t : denominators)
        if (!(std::abs(t) > 1e-12 * big)) throw Error(Errc::NearDivisor, std::string(what) + ": Z too close to a divisor");
}

} // namespace

cplx u_bare(const PrymFrame& f, LatticeIndex idx, const CVec& Z) {
    const int nu = f.nu_of(idx);
    const int n = idx.n, m = idx.m;
    const cplx a = f.th(f.shift(n + 1, m) + double(nu) * f.W + Z);
    const cplx b = f.th(f.shift(n, m + 1) + double(nu) * f.W + Z);
    const cplx c = f.th(f.shift(n + 1, m + 1) + double(1 - nu) * f.W + Z);
    const cplx d = f.th(f.shift(n, m) + double(1 - nu) * f.W + Z);
    guard({a, b, c, d}, {c, d}, "u");
    return a * b / (c * d);
}

cplx psi_bare(const PrymFrame& f, const CVec& A, LatticeIndex idx, const CVec& Z) {
    const int nu = f.nu_of(idx);
    const cplx num = f.th(A + f.shift(idx.n, idx.m) + double(nu) * f.W + Z);
    const cplx den = f.th(f.shift(idx.n, idx.m) + double(1 - nu) * f.W + Z);
    guard({num, den}, {den}, "psi");
    return num / den;
}

cplx u_field(const PrymFrame& f, const SchroedingerConstants& k, LatticeIndex idx, const CVec& Z) {
    return potential_prefactor(k, idx.n, idx.m, f.nu_of(idx)) * u_bare(f, idx, Z);
}

cplx psi_field_at(const PrymFrame& f, const CVec& A, const SchroedingerConstants& k, LatticeIndex idx,
                  const CVec& Z) {
    return psi_prefactor(k, idx.n, idx.m, f.nu_of(idx)) * psi_bare(f, A, idx, Z);
}

cplx psi_field(const PrymFrame& f, const SchroedingerConstants& k, LatticeIndex idx, const CVec& Z) {
    return psi_field_at(f, f.A, k, idx, Z);
}

CVec sample_Z(const PeriodMatrix& Pi, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-0.5, 0.5);
    const int g = Pi.g();
    RVec x(g), y(g);
    for (int i = 0; i < g; ++i) x[i] = u(rng);
    for (int i = 0; i < g; ++i) y[i] = u(rng);
    return x.cast<cplx>() + Pi.matrix() * y.cast<cplx>();
}

std::vector<CVec> sample_Zs(const PeriodMatrix& Pi, int count, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<CVec> out;
    for (int i = 0; i < count; ++i) out.push_back(sample_Z(Pi, rng));
    return out;
}

} // namespace prymlab
