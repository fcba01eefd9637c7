#include <prymlab/harness.hpp>
#include <prymlab/pdo.hpp>

#include <atomic>
#include <chrono>
#include <exception>
#include <functional>
#include <random>
#include <set>
#include <thread>

namespace prymlab {

namespace {

using io::json;

// Seeds of the independent sample streams, offset from the configured seed.
enum Stream : std::uint64_t { kZ = 0, kFiveTerm = 1, kDivisor = 2, kFourPoint = 3, kNvFit = 4 };

std::uint64_t stream_seed(const RunConfig& c, Stream s) { return c.seed * 7919u + s; }

Window to_window(const IndexWindow& w) { return {w.n_lo, w.n_hi, w.m_lo, w.m_hi}; }

struct Genuine {
    DoubleCoverCurve curve;
    PeriodResult periods;
    PrymData data;
};

Genuine build_data(const RunConfig& c) {
    Genuine g;
    g.curve = io::curve_from(c.curve, "config.curve");
    g.periods = period_matrix(g.curve);
    g.data = make_prym_data(g.curve, g.periods, c.marked_x, c.extra_x);
    return g;
}

ConstantFit fit_for(const RunConfig& c, const PrymData& d) {
    FitOptions opt;
    opt.policy = c.policy;
    opt.tolerance = c.tolerances.at("constant_probe");
    return fit_constants(d, opt);
}

using Job = std::function<IdentityReport()>;

// Jobs run on up to `threads` workers; results land in job order, so the report does not depend
// on scheduling. The first exception (in job order) is rethrown.
std::vector<IdentityReport> run_jobs(const std::vector<Job>& jobs, int threads) {
    std::vector<IdentityReport> out(jobs.size());
    std::vector<std::exception_ptr> err(jobs.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i; (i = next++) < jobs.size();) {
            try {
                out[i] = jobs[i]();
            } catch (...) {
                err[i] = std::current_exception();
            }
        }
    };
    const int n = std::max(1, std::min<int>(threads, int(jobs.size())));
    if (n == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (int t = 0; t < n; ++t) pool.emplace_back(worker);
    }
    for (auto& e : err)
        if (e) std::rethrow_exception(e);
    return out;
}

IdentityReport single(const std::string& name, double tol, double residual, const std::string& note = {}) {
    IdentityReport r;
    r.identity = name;
    r.tolerance = tol;
    r.note = note;
    r.add(0, 0, 0, CVec(), residual);
    return r.finish();
}

std::vector<IdentityReport> period_checks(const RunConfig& c, const Genuine& g) {
    std::vector<IdentityReport> out;
    out.push_back(single("period_symmetry", c.tolerances.at("period_symmetry"), g.periods.symmetry_residual));
    if (g.curve.g == 1) {
        const auto x = cross_check_elliptic(g.curve);
        if (x.supported) out.push_back(single("period_agm", c.tolerances.at("period_agm"), x.discrepancy));
    }
    return out;
}

json periods_json(const Genuine& g) {
    json j{{"Pi", io::to_json(g.periods.Pi.matrix())},
           {"quad_order", g.periods.quad_order},
           {"symmetry_residual", io::hex(g.periods.symmetry_residual)},
           {"b_orientation", io::hex(g.periods.basis.b_orientation)}};
    if (g.curve.g == 1) {
        const auto x = cross_check_elliptic(g.curve);
        if (x.supported) j["agm_ratio"] = io::to_json(x.agm_ratio);
    }
    return j;
}

struct Suite {
    const RunConfig& c;
    PrymFrame f;               // possibly perturbed Pi, genuine vectors
    SchroedingerConstants k;   // genuine constants
    bool even_is_upper = true;
    std::vector<CVec> zs, zs5; // drawn from the genuine Pi
    std::vector<DivisorPoint> pts;

    double tol(const char* key) const { return c.tolerances.at(key); }

    IdentityReport A() const { return verify_A(f, k, c.a_window, zs, tol("A")); }
    IdentityReport B() const { return verify_B(f, &k, {tol("B"), even_is_upper}); }
    IdentityReport C() const { return verify_C(f, k, pts, tol("C")); }
    IdentityReport quad() const { return verify_quad(f, k, zs, tol("quad")); }
    IdentityReport five_term() const { return verify_five_term(f, k, c.five_term_window, zs5, tol("five_term")); }
    IdentityReport tau() const { return verify_tau_residues(f, prym_tau_model(f, k), pts, tol("tau")); }
    IdentityReport recursion() const {
        return verify_recursion_consistency(f, prym_tau_model(f, k), pts, tol("recursion"));
    }

    // F~_1 from the operator side against the Z-gradient of log tau, one sample per lattice site.
    IdentityReport nv_fit(json* details) const {
        const auto zn = sample_Zs(f.Pi, c.nv_fit_samples, stream_seed(c, kNvFit));
        const auto samples = theta_derivative_samples(f, k, zn, to_window(c.nv_fit_window));
        IdentityReport r;
        r.identity = "nv_theta_derivative";
        r.tolerance = tol("nv_fit");
        const ThetaDerivativeFit fit = theta_derivative_fit(samples);
        for (std::size_t i = 0; i < samples.size(); ++i)
            r.add(samples[i].n, samples[i].m, samples[i].parity, samples[i].Z, fit.misfits[i]);
        if (details) (*details)["nv_fit_direction"] = io::to_json(fit.direction);
        return r.finish();
    }

    // Operator-algebra checks on one Prym tau grid: they hold for any tau, so they are checks.
    std::vector<IdentityReport> nv_checks(json* details) const {
        const CVec Z = sample_Zs(f.Pi, 1, stream_seed(c, kNvFit) + 1000u).front();
        const PrymTauGrid pg = prym_tau_grid(f, k, Z, to_window(c.nv_window));
        NvOptions o;
        o.C = pg.C;
        o.s_max = c.nv_s_max;
        o.tolerance = tol("nv");
        const NvReport rep = nv_structure_check(pg.tau, o);
        if (details) {
            (*details)["nv"] = {{"v_ratio_deviation", io::hex(rep.v_ratio_deviation)},
                                {"wave_compatibility", io::hex(rep.wave_compatibility)},
                                {"wave_L_mismatch", io::hex(rep.wave_L_mismatch)},
                                {"f_tilde_routes", io::hex(rep.f_tilde_routes)}};
        }
        std::vector<IdentityReport> out{rep.h0, rep.hs, rep.shape, rep.flow, rep.potential_relation};
        for (auto& r : out) r.identity = r.identity.rfind("nv_", 0) == 0 ? r.identity : "nv_" + r.identity;
        return out;
    }

    // Genus 1 only: the four-point equation on the elliptic curve with modulus Pi, random points.
    IdentityReport four_point() const {
        if (f.g() != 1) throw Error(Errc::ConfigError, "config.curve: the four-point check needs a genus-1 curve");
        std::mt19937_64 rng(stream_seed(c, kFourPoint));
        std::uniform_real_distribution<double> u(-0.5, 0.5);
        auto draw = [&] { return cplx(u(rng), u(rng)); };
        for (int attempt = 0; attempt < 32; ++attempt) {
            FourPointConfig cfg;
            cfg.tau = f.Pi.matrix()(0, 0);
            cfg.q1_plus = draw(), cfg.q1_minus = draw(), cfg.q2_plus = draw(), cfg.q2_minus = draw();
            cfg.gamma = draw();
            std::vector<cplx> zs;
            for (int i = 0; i < c.four_point_samples; ++i) zs.push_back(draw());
            try {
                double agree = 0.0;
                IdentityReport r = verify_general_four_point_genus1(cfg, c.four_point_window, zs, tol("four_point"), &agree);
                r.identity = "four_point";
                r.note = "coefficient routes agree to " + io::hex(agree);
                return r;
            } catch (const Error& e) {
                if (e.code() != Errc::DegenerateConfiguration && e.code() != Errc::NearDivisor) throw;
            }
        }
        throw Error(Errc::DegenerateConfiguration, "no usable four-point configuration in 32 draws");
    }
};

Suite make_suite(const RunConfig& c, const PrymData& genuine, const PrymData& used, const ConstantFit& fit) {
    Suite s{c, PrymFrame(used, fit.w_sign, c.policy), fit.constants, fit.even_is_upper, {}, {}, {}};
    s.zs = sample_Zs(genuine.Pi, c.z_samples, stream_seed(c, kZ));
    s.zs5 = sample_Zs(genuine.Pi, c.five_term_samples, stream_seed(c, kFiveTerm));
    s.pts = divisor_points(used.Pi, c.divisor_samples, stream_seed(c, kDivisor), c.policy);
    return s;
}

void record_constants(RunReport& r, const ConstantFit& fit) {
    r.constants = fit.constants;
    r.w_sign = fit.w_sign;
    r.even_is_upper = fit.even_is_upper;
}

void full_suite(RunReport& rep, const RunConfig& c, const Genuine& g, const PrymData& used) {
    const ConstantFit fit = fit_for(c, g.data);
    record_constants(rep, fit);
    const Suite s = make_suite(c, g.data, used, fit);

    json nv_details, fit_details;
    std::vector<IdentityReport> nv;
    std::vector<Job> jobs{[&] { return s.A(); },         [&] { return s.B(); },
                          [&] { return s.C(); },         [&] { return s.quad(); },
                          [&] { return s.five_term(); }, [&] { return s.tau(); },
                          [&] { return s.recursion(); }, [&] { return s.nv_fit(&fit_details); },
                          [&] {
                              nv = s.nv_checks(&nv_details);
                              return IdentityReport{};
                          }};
    if (s.f.g() == 1) jobs.push_back([&] { return s.four_point(); });
    auto res = run_jobs(jobs, c.threads);

    rep.identities.assign(res.begin(), res.begin() + 8);
    rep.checks = period_checks(c, g);
    rep.checks.insert(rep.checks.end(), nv.begin(), nv.end());
    if (s.f.g() == 1) rep.checks.push_back(res[9]);
    rep.details.update(nv_details);
    rep.details.update(fit_details);
}

PrymData perturbed(const PrymData& d, double eps) {
    CMat M = d.Pi.matrix();
    M(0, 0) += eps;
    if (M.rows() > 1) M(0, 1) += eps, M(1, 0) += eps;
    PrymData p = d;
    p.Pi = validate_period_matrix(M);
    return p;
}

RunReport start(const RunConfig& c) {
    RunReport r;
    r.command = c.command == "verify" ? "verify " + c.target : c.command;
    r.config_hash = sha256_hex(c.effective.dump());
    r.seed = c.seed;
    return r;
}

void dispatch(RunReport& rep, const RunConfig& c) {
    if (c.command == "negative-control") {
        rep = negative_control(c, c.perturbation);
        return;
    }
    static const std::set<std::string> known{"periods", "prym-data", "verify", "recover-constants", "nv-check", "all"};
    if (!known.count(c.command)) throw Error(Errc::ConfigError, "unknown command '" + c.command + "'");
    const Genuine g = build_data(c);
    rep.genus = g.curve.g;
    if (c.command == "periods") {
        rep.checks = period_checks(c, g);
        rep.details["periods"] = periods_json(g);
    } else if (c.command == "prym-data") {
        rep.details["prym_data"] = io::to_json(g.data);
    } else if (c.command == "recover-constants") {
        const ConstantFit fit = fit_for(c, g.data);
        record_constants(rep, fit);
        rep.checks.push_back(single("constant_probe", c.tolerances.at("constant_probe"), fit.probe_residual));
        json trials = json::array();
        for (double t : fit.trial_residuals) trials.push_back(io::hex(t));
        rep.details["constant_fit"] = {{"plain_fit_discrepancy", io::hex(fit.plain_fit_discrepancy)},
                                       {"null_dimension", {fit.null_dimension[0], fit.null_dimension[1]}},
                                       {"trial_residuals", trials},
                                       {"coefficient_residual", io::hex(fit.recovery.coefficient_residual)}};
    } else if (c.command == "nv-check") {
        const ConstantFit fit = fit_for(c, g.data);
        record_constants(rep, fit);
        const Suite s = make_suite(c, g.data, g.data, fit);
        json details;
        rep.identities.push_back(s.nv_fit(&details));
        rep.checks = s.nv_checks(&details);
        rep.details.update(details);
    } else if (c.command == "verify") {
        if (c.target.empty()) throw Error(Errc::ConfigError, "config.target: verify needs an identity");
        const ConstantFit fit = fit_for(c, g.data);
        record_constants(rep, fit);
        const Suite s = make_suite(c, g.data, g.data, fit);
        const std::map<std::string, std::function<IdentityReport()>> one{
            {"A", [&] { return s.A(); }},
            {"B", [&] { return s.B(); }},
            {"C", [&] { return s.C(); }},
            {"quad", [&] { return s.quad(); }},
            {"five-term", [&] { return s.five_term(); }},
            {"tau", [&] { return s.tau(); }},
            {"recursion", [&] { return s.recursion(); }},
            {"four-point", [&] { return s.four_point(); }}};
        if (!one.count(c.target)) throw Error(Errc::ConfigError, "verify: unknown identity '" + c.target + "'");
        if (c.target == "four-point")
            rep.checks.push_back(one.at(c.target)());
        else
            rep.identities.push_back(one.at(c.target)());
    } else if (c.command == "all") {
        full_suite(rep, c, g, g.data);
        rep.details["periods"] = periods_json(g);
    } else {
        throw Error(Errc::ConfigError, "config.command: unknown command '" + c.command + "'");
    }
}

} // namespace

void RunReport::conclude() {
    pass = true;
    for (const auto* list : {&identities, &checks})
        for (const auto& r : *list) pass = pass && r.pass;
}

RunReport run(const RunConfig& c) {
    const auto t0 = std::chrono::steady_clock::now();
    RunReport rep = start(c);
    dispatch(rep, c);
    rep.conclude();
    rep.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rep;
}

RunReport negative_control(const RunConfig& c, double perturbation) {
    if (!(perturbation >= 0.0)) throw Error(Errc::ConfigError, "config.negative_control.perturbation: must be >= 0");
    const auto t0 = std::chrono::steady_clock::now();
    RunReport rep = start(c);
    rep.command = "negative-control";
    const Genuine g = build_data(c);
    rep.genus = g.curve.g;
    const PrymData used = perturbation == 0.0 ? g.data : perturbed(g.data, perturbation);
    full_suite(rep, c, g, used);
    rep.details["periods"] = periods_json(g);
    rep.conclude();

    // how far each identity lands outside its tolerance
    json margins = json::object();
    int failing = 0, clear = 0;
    for (const auto& r : rep.identities) {
        const double ratio = r.max_rel_residual / r.tolerance;
        margins[r.identity] = io::hex(ratio);
        failing += r.pass ? 0 : 1;
        clear += ratio > 10.0 ? 1 : 0;
    }
    const int total = int(rep.identities.size());
    std::string verdict;
    if (failing == 0)
        verdict = "indistinguishable at tolerance";
    else if (clear == total)
        verdict = "every identity fails by more than 10x its tolerance";
    else if (failing == total)
        verdict = "every identity fails";
    else
        verdict = "partially distinguishable";
    rep.details["negative_control"] = {{"perturbation", io::hex(perturbation)},
                                       {"failing", failing},
                                       {"beyond_10x", clear},
                                       {"residual_over_tolerance", margins},
                                       {"verdict", verdict}};
    rep.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rep;
}

int exit_code(Errc e) { return e == Errc::ConfigError || e == Errc::IoError ? 2 : 3; }

int exit_code(const RunReport& r) { return r.pass ? 0 : 1; }

} // namespace prymlab
