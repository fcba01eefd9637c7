#include <prymlab/harness.hpp>

#include <fstream>
#include <set>

namespace prymlab {

namespace {

using io::json;

const std::set<std::string> kCommands{"periods", "prym-data", "verify", "recover-constants", "nv-check",
                                      "negative-control", "all"};
const std::set<std::string> kTargets{"A", "B", "C", "quad", "five-term", "tau", "recursion", "four-point"};

void only_keys(const json& j, const std::set<std::string>& allowed, const std::string& path) {
    if (!j.is_object()) throw Error(Errc::ConfigError, path + ": expected an object");
    for (const auto& [k, v] : j.items())
        if (!allowed.count(k)) throw Error(Errc::ConfigError, path + "." + k + ": unknown field");
}

int positive_int(const json& j, const std::string& path) {
    if (!j.is_number_integer() || j.get<long long>() < 1 || j.get<long long>() > 1000000)
        throw Error(Errc::ConfigError, path + ": expected a positive integer");
    return j.get<int>();
}

double nonnegative(const json& j, const std::string& path) {
    const double x = io::unhex(j, path);
    if (!(x >= 0.0) || !std::isfinite(x)) throw Error(Errc::ConfigError, path + ": expected a finite number >= 0");
    return x;
}

std::string string_field(const json& j, const std::string& path) {
    if (!j.is_string()) throw Error(Errc::ConfigError, path + ": expected a string");
    return j.get<std::string>();
}

IndexWindow index_window(const json& j, const std::string& path) {
    if (!j.is_array() || j.size() != 4) throw Error(Errc::ConfigError, path + ": window needs [n_lo, n_hi, m_lo, m_hi]");
    int b[4];
    for (std::size_t k = 0; k < 4; ++k) {
        if (!j[k].is_number_integer()) throw Error(Errc::ConfigError, path + ": window bounds must be integers");
        b[k] = j[k].get<int>();
    }
    if (b[0] > b[1] || b[2] > b[3]) throw Error(Errc::ConfigError, path + ": empty window");
    return {b[0], b[1], b[2], b[3]};
}

json window_json(const IndexWindow& w) { return json::array({w.n_lo, w.n_hi, w.m_lo, w.m_hi}); }

} // namespace

const std::map<std::string, double>& default_tolerances() {
    static const std::map<std::string, double> t{
        {"A", 1e-6},          {"B", 1e-6},           {"C", 1e-6},      {"quad", 1e-6},
        {"five_term", 1e-6},  {"tau", 1e-6},         {"recursion", 1e-6}, {"four_point", 1e-8},
        {"nv", 1e-9},         {"nv_fit", 1e-8},      {"period_agm", 1e-10}, {"period_symmetry", 1e-8},
        {"constant_probe", 1e-6}};
    return t;
}

RunConfig parse_config(const json& doc) {
    const std::string root = "config";
    only_keys(doc, {"command", "target", "curve", "marked_x", "extra_x", "theta", "windows", "samples", "nv_s_max",
                    "tolerances", "seed", "threads", "negative_control"},
              root);
    RunConfig c;

    if (doc.contains("command")) {
        c.command = string_field(doc["command"], root + ".command");
        if (!kCommands.count(c.command)) throw Error(Errc::ConfigError, root + ".command: unknown command '" + c.command + "'");
    }
    if (doc.contains("target")) {
        c.target = string_field(doc["target"], root + ".target");
        if (!kTargets.count(c.target)) throw Error(Errc::ConfigError, root + ".target: unknown identity '" + c.target + "'");
    }

    c.curve = io::field(doc, "curve", root);
    only_keys(c.curve, {"h_roots", "h_coeffs", "leading"}, root + ".curve");
    (void)io::curve_from(c.curve, root + ".curve");

    const json& mx = io::field(doc, "marked_x", root);
    if (!mx.is_array() || mx.size() != 3) throw Error(Errc::ConfigError, root + ".marked_x: needs three values");
    for (std::size_t k = 0; k < 3; ++k)
        c.marked_x[k] = io::complex_from(mx[k], root + ".marked_x[" + std::to_string(k) + "]");
    c.extra_x = io::complex_from(io::field(doc, "extra_x", root), root + ".extra_x");

    if (doc.contains("theta")) {
        const json& t = doc["theta"];
        only_keys(t, {"target_abs_error", "max_radius"}, root + ".theta");
        if (t.contains("target_abs_error")) {
            c.policy.target_abs_error = nonnegative(t["target_abs_error"], root + ".theta.target_abs_error");
            if (c.policy.target_abs_error == 0.0) throw Error(Errc::ConfigError, root + ".theta.target_abs_error: must be positive");
        }
        if (t.contains("max_radius")) c.policy.max_radius = positive_int(t["max_radius"], root + ".theta.max_radius");
    }

    if (doc.contains("windows")) {
        const json& w = doc["windows"];
        const std::string p = root + ".windows";
        only_keys(w, {"A", "five_term", "four_point", "nv", "nv_fit"}, p);
        if (w.contains("A")) c.a_window = index_window(w["A"], p + ".A");
        if (w.contains("five_term")) c.five_term_window = index_window(w["five_term"], p + ".five_term");
        if (w.contains("four_point")) c.four_point_window = index_window(w["four_point"], p + ".four_point");
        if (w.contains("nv")) c.nv_window = index_window(w["nv"], p + ".nv");
        if (w.contains("nv_fit")) c.nv_fit_window = index_window(w["nv_fit"], p + ".nv_fit");
    }
    if (doc.contains("samples")) {
        const json& s = doc["samples"];
        const std::string p = root + ".samples";
        only_keys(s, {"Z", "five_term", "divisor", "nv_fit", "four_point"}, p);
        if (s.contains("Z")) c.z_samples = positive_int(s["Z"], p + ".Z");
        if (s.contains("five_term")) c.five_term_samples = positive_int(s["five_term"], p + ".five_term");
        if (s.contains("divisor")) c.divisor_samples = positive_int(s["divisor"], p + ".divisor");
        if (s.contains("nv_fit")) c.nv_fit_samples = positive_int(s["nv_fit"], p + ".nv_fit");
        if (s.contains("four_point")) c.four_point_samples = positive_int(s["four_point"], p + ".four_point");
    }
    if (doc.contains("nv_s_max")) c.nv_s_max = positive_int(doc["nv_s_max"], root + ".nv_s_max");

    c.tolerances = default_tolerances();
    if (doc.contains("tolerances")) {
        const json& t = doc["tolerances"];
        if (!t.is_object()) throw Error(Errc::ConfigError, root + ".tolerances: expected an object");
        for (const auto& [k, v] : t.items()) {
            const std::string p = root + ".tolerances." + k;
            if (!c.tolerances.count(k)) throw Error(Errc::ConfigError, p + ": unknown identity");
            c.tolerances[k] = nonnegative(v, p);
        }
    }

    if (doc.contains("seed")) {
        const json& s = doc["seed"];
        if (!s.is_number_unsigned()) throw Error(Errc::ConfigError, root + ".seed: expected a nonnegative integer");
        c.seed = s.get<std::uint64_t>();
    }
    if (doc.contains("threads")) c.threads = positive_int(doc["threads"], root + ".threads");
    if (doc.contains("negative_control")) {
        const json& n = doc["negative_control"];
        only_keys(n, {"perturbation"}, root + ".negative_control");
        if (n.contains("perturbation"))
            c.perturbation = nonnegative(n["perturbation"], root + ".negative_control.perturbation");
    }

    // everything that influences results, with defaults spelled out; the thread count does not
    json e;
    e["curve"] = c.curve;
    json m = json::array();
    for (auto x : c.marked_x) m.push_back(io::to_json(x));
    e["marked_x"] = m;
    e["extra_x"] = io::to_json(c.extra_x);
    e["theta"] = {{"target_abs_error", io::hex(c.policy.target_abs_error)}, {"max_radius", c.policy.max_radius}};
    e["windows"] = {{"A", window_json(c.a_window)},
                    {"five_term", window_json(c.five_term_window)},
                    {"four_point", window_json(c.four_point_window)},
                    {"nv", window_json(c.nv_window)},
                    {"nv_fit", window_json(c.nv_fit_window)}};
    e["samples"] = {{"Z", c.z_samples},
                    {"five_term", c.five_term_samples},
                    {"divisor", c.divisor_samples},
                    {"nv_fit", c.nv_fit_samples},
                    {"four_point", c.four_point_samples}};
    e["nv_s_max"] = c.nv_s_max;
    json tol = json::object();
    for (const auto& [k, v] : c.tolerances) tol[k] = io::hex(v);
    e["tolerances"] = tol;
    e["seed"] = c.seed;
    e["negative_control"] = {{"perturbation", io::hex(c.perturbation)}};
    c.effective = std::move(e);
    return c;
}

RunConfig load_config(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw Error(Errc::ConfigError, "cannot open config file " + file.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw Error(Errc::ConfigError, file.string() + ": " + e.what());
    }
    return parse_config(doc);
}

void apply_seed(RunConfig& c, std::uint64_t seed) {
    c.seed = seed;
    c.effective["seed"] = seed;
}

} // namespace prymlab
