#include <prymlab/harness.hpp>

#include <openssl/evp.h>

#include <fstream>
#include <sstream>

namespace prymlab {

namespace {

using io::json;

json identity_json(const IdentityReport& r) {
    return {{"identity", r.identity},
            {"tolerance", io::hex(r.tolerance)},
            {"max_rel_residual", io::hex(r.max_rel_residual)},
            {"mean_rel_residual", io::hex(r.mean_rel_residual)},
            {"pass", r.pass},
            {"note", r.note},
            {"sample_count", r.sample_count()}};
}

const json& typed(const json& j, const std::string& key, const std::string& path, bool (json::*ok)() const noexcept) {
    const json& v = io::field(j, key, path);
    if (!(v.*ok)()) throw Error(Errc::ConfigError, path + "." + key + ": wrong type");
    return v;
}

// Samples are kept in the CSV, so a reload from JSON alone has none; load_report reattaches them.
IdentityReport identity_from(const json& j, const std::string& path) {
    IdentityReport r;
    r.identity = typed(j, "identity", path, &json::is_string).get<std::string>();
    r.tolerance = io::unhex(io::field(j, "tolerance", path), path + ".tolerance");
    r.max_rel_residual = io::unhex(io::field(j, "max_rel_residual", path), path + ".max_rel_residual");
    r.mean_rel_residual = io::unhex(io::field(j, "mean_rel_residual", path), path + ".mean_rel_residual");
    r.pass = typed(j, "pass", path, &json::is_boolean).get<bool>();
    r.note = typed(j, "note", path, &json::is_string).get<std::string>();
    return r;
}

json constants_json(const SchroedingerConstants& k) {
    return {{"c1", io::to_json(k.c1)}, {"c2", io::to_json(k.c2)}, {"c3", io::to_json(k.c3)},
            {"w1", io::to_json(k.w1)}, {"w2", io::to_json(k.w2)}, {"w3", io::to_json(k.w3)}};
}

SchroedingerConstants constants_from(const json& j, const std::string& path) {
    SchroedingerConstants k;
    k.c1 = io::complex_from(io::field(j, "c1", path), path + ".c1");
    k.c2 = io::complex_from(io::field(j, "c2", path), path + ".c2");
    k.c3 = io::complex_from(io::field(j, "c3", path), path + ".c3");
    k.w1 = io::complex_from(io::field(j, "w1", path), path + ".w1");
    k.w2 = io::complex_from(io::field(j, "w2", path), path + ".w2");
    k.w3 = io::complex_from(io::field(j, "w3", path), path + ".w3");
    return k;
}

int max_z_size(const RunReport& r) {
    Eigen::Index g = 0;
    for (const auto* list : {&r.identities, &r.checks})
        for (const auto& rep : *list)
            for (const auto& s : rep.samples) g = std::max(g, s.Z.size());
    return int(g);
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

void write_file(const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::IoError, "cannot write " + p.string());
    out << text;
    if (!out.flush()) throw Error(Errc::IoError, "write failed for " + p.string());
}

} // namespace

json report_json(const RunReport& r) {
    json ids = json::array(), checks = json::array();
    for (const auto& x : r.identities) ids.push_back(identity_json(x));
    for (const auto& x : r.checks) checks.push_back(identity_json(x));
    return {{"schema_version", r.schema_version},
            {"command", r.command},
            {"config_hash", r.config_hash},
            {"seed", r.seed},
            {"genus", r.genus},
            {"pass", r.pass},
            {"identities", ids},
            {"checks", checks},
            {"constants", r.constants ? constants_json(*r.constants) : json(nullptr)},
            {"w_sign", r.w_sign ? json(io::hex(*r.w_sign)) : json(nullptr)},
            {"even_is_upper", r.even_is_upper ? json(*r.even_is_upper) : json(nullptr)},
            {"details", r.details},
            {"wall_time_s", io::hex(r.wall_time_s)}};
}

RunReport report_from(const json& j, const std::string& path) {
    RunReport r;
    r.schema_version = typed(j, "schema_version", path, &json::is_number_integer).get<int>();
    if (r.schema_version != kReportSchemaVersion)
        throw Error(Errc::ConfigError, path + ".schema_version: unsupported version " + std::to_string(r.schema_version));
    r.command = typed(j, "command", path, &json::is_string).get<std::string>();
    r.config_hash = typed(j, "config_hash", path, &json::is_string).get<std::string>();
    r.seed = typed(j, "seed", path, &json::is_number_unsigned).get<std::uint64_t>();
    r.genus = typed(j, "genus", path, &json::is_number_integer).get<int>();
    r.pass = typed(j, "pass", path, &json::is_boolean).get<bool>();
    for (const char* key : {"identities", "checks"}) {
        const json& list = typed(j, key, path, &json::is_array);
        auto& dst = std::string(key) == "identities" ? r.identities : r.checks;
        for (std::size_t i = 0; i < list.size(); ++i)
            dst.push_back(identity_from(list[i], path + "." + key + "[" + std::to_string(i) + "]"));
    }
    const json& k = io::field(j, "constants", path);
    if (!k.is_null()) r.constants = constants_from(k, path + ".constants");
    const json& w = io::field(j, "w_sign", path);
    if (!w.is_null()) r.w_sign = io::unhex(w, path + ".w_sign");
    const json& e = io::field(j, "even_is_upper", path);
    if (!e.is_null()) r.even_is_upper = e.get<bool>();
    r.details = typed(j, "details", path, &json::is_object);
    r.wall_time_s = io::unhex(io::field(j, "wall_time_s", path), path + ".wall_time_s");
    return r;
}

void emit_report(const RunReport& r, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw Error(Errc::IoError, "cannot create " + dir.string() + ": " + ec.message());
    write_file(dir / "report.json", report_json(r).dump(2) + "\n");

    const int g = max_z_size(r);
    std::ostringstream csv;
    csv << "identity,n,m,nu";
    for (int i = 1; i <= g; ++i) csv << ",Z_re_" << i;
    for (int i = 1; i <= g; ++i) csv << ",Z_im_" << i;
    csv << ",residual\n";
    for (const auto* list : {&r.identities, &r.checks})
        for (const auto& rep : *list)
            for (const auto& s : rep.samples) {
                csv << rep.identity << ',' << s.n << ',' << s.m << ',' << s.nu;
                for (int i = 0; i < g; ++i) csv << ',' << (i < s.Z.size() ? io::hex(s.Z[i].real()) : "");
                for (int i = 0; i < g; ++i) csv << ',' << (i < s.Z.size() ? io::hex(s.Z[i].imag()) : "");
                csv << ',' << io::hex(s.residual) << '\n';
            }
    write_file(dir / "residuals.csv", csv.str());
}

RunReport load_report(const std::filesystem::path& dir) {
    std::ifstream in(dir / "report.json");
    if (!in) throw Error(Errc::IoError, "cannot read " + (dir / "report.json").string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw Error(Errc::IoError, (dir / "report.json").string() + ": " + e.what());
    }
    RunReport r = report_from(j);

    std::ifstream csv(dir / "residuals.csv");
    if (!csv) throw Error(Errc::IoError, "cannot read " + (dir / "residuals.csv").string());
    std::string line;
    std::getline(csv, line);
    const auto header = split(line);
    const int g = int(header.size() - 5) / 2;
    std::map<std::string, IdentityReport*> by_name;
    for (auto* list : {&r.identities, &r.checks})
        for (auto& rep : *list) by_name[rep.identity] = &rep;
    for (int row = 2; std::getline(csv, line); ++row) {
        const auto cells = split(line);
        const std::string where = "residuals.csv:" + std::to_string(row);
        if (int(cells.size()) != 5 + 2 * g) throw Error(Errc::IoError, where + ": wrong number of cells");
        const auto it = by_name.find(cells[0]);
        if (it == by_name.end()) throw Error(Errc::IoError, where + ": identity not in the report");
        ResidualSample s;
        s.n = std::stoi(cells[1]), s.m = std::stoi(cells[2]), s.nu = std::stoi(cells[3]);
        if (g > 0 && !cells[4].empty()) {
            s.Z.resize(g);
            for (int i = 0; i < g; ++i)
                s.Z[i] = cplx(io::unhex(json(cells[4 + i]), where), io::unhex(json(cells[4 + g + i]), where));
        }
        s.residual = io::unhex(json(cells[4 + 2 * g]), where);
        it->second->samples.push_back(s);
    }
    return r;
}

std::string sha256_hex(const std::string& bytes) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (!EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr))
        throw std::runtime_error("SHA-256 failed");
    static const char* digits = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out += digits[md[i] >> 4];
        out += digits[md[i] & 15];
    }
    return out;
}

} // namespace prymlab
