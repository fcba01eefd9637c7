#include <prymlab/harness.hpp>

#include <catch2/catch_amalgamated.hpp>

#include <fstream>
#include <sstream>

using namespace prymlab;
using io::json;

namespace {

const std::filesystem::path kConfigs = PRYMLAB_CONFIG_DIR;

json reference_doc(const char* name = "g1_reference.json") {
    std::ifstream in(kConfigs / name);
    return json::parse(in);
}

std::string config_error(const json& doc) {
    try {
        (void)parse_config(doc);
    } catch (const Error& e) {
        CHECK(e.code() == Errc::ConfigError);
        return e.what();
    }
    FAIL("config accepted");
    return {};
}

json without_wall_time(json j) {
    j.erase("wall_time_s");
    return j;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::filesystem::path scratch(const std::string& name) {
    const auto p = std::filesystem::temp_directory_path() / ("prymlab_harness_" + name);
    std::filesystem::remove_all(p);
    return p;
}

// the g1 reference with a lighter sample load; the suite logic is unchanged
RunConfig light(const std::string& command = "all") {
    json doc = reference_doc();
    doc["samples"] = {{"Z", 6}, {"five_term", 3}, {"divisor", 4}, {"nv_fit", 3}, {"four_point", 2}};
    doc["windows"]["nv"] = {-24, 24, 0, 12};
    RunConfig c = parse_config(doc);
    c.command = command;
    return c;
}

const RunReport& light_all() {
    static const RunReport r = run(light());
    return r;
}

} // namespace

TEST_CASE("config errors name the field path") {
    json doc = reference_doc();
    doc.erase("marked_x");
    CHECK_THAT(config_error(doc), Catch::Matchers::ContainsSubstring("config.marked_x"));

    doc = reference_doc();
    doc["marked_x"] = json::array({0.3, 0.4});
    CHECK_THAT(config_error(doc), Catch::Matchers::ContainsSubstring("config.marked_x"));

    doc = reference_doc();
    doc["marked_x"][1] = "not a number";
    CHECK_THAT(config_error(doc), Catch::Matchers::ContainsSubstring("config.marked_x[1]"));

    doc = reference_doc();
    doc["windows"]["A"] = json::array({0, 5, 0, 2.5});
    CHECK_THAT(config_error(doc), Catch::Matchers::ContainsSubstring("config.windows.A"));

    doc = reference_doc();
    doc["tolerances"]["Q"] = 1e-6;
    CHECK_THAT(config_error(doc), Catch::Matchers::ContainsSubstring("config.tolerances.Q"));

    doc = reference_doc();
    doc["sampels"] = json::object();
    CHECK_THAT(config_error(doc), Catch::Matchers::ContainsSubstring("config.sampels: unknown field"));

    doc = reference_doc();
    doc.erase("curve");
    CHECK_THAT(config_error(doc), Catch::Matchers::ContainsSubstring("config.curve"));

    doc = reference_doc();
    doc["seed"] = -3;
    CHECK_THAT(config_error(doc), Catch::Matchers::ContainsSubstring("config.seed"));

    doc = reference_doc();
    doc["negative_control"]["perturbation"] = -1e-3;
    CHECK_THAT(config_error(doc), Catch::Matchers::ContainsSubstring("config.negative_control.perturbation"));

    CHECK_THROWS_AS(load_config(kConfigs / "missing.json"), Error);
}

TEST_CASE("bundled configs parse") {
    for (const char* name : {"g1_reference.json", "g2_reference.json"}) {
        const RunConfig c = load_config(kConfigs / name);
        CHECK(c.command == "all");
        CHECK(c.tolerances.size() == default_tolerances().size());
        CHECK(c.marked_x[2] == cplx(0.0, 1.1));
        CHECK(c.extra_x == cplx(0.5, 0.6));
    }
}

TEST_CASE("config hash covers every result-relevant field") {
    const RunConfig a = light();
    RunConfig b = light();
    b.threads = 7;
    CHECK(sha256_hex(a.effective.dump()) == sha256_hex(b.effective.dump()));
    apply_seed(b, a.seed + 1);
    CHECK(sha256_hex(a.effective.dump()) != sha256_hex(b.effective.dump()));
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("all on the genus-1 reference") {
    const RunReport& r = light_all();
    CHECK(r.pass);
    CHECK(exit_code(r) == 0);
    CHECK(r.schema_version == kReportSchemaVersion);
    CHECK(r.genus == 1);
    REQUIRE(r.constants.has_value());
    CHECK(r.identities.size() == 8);
    for (const auto& x : r.identities) CHECK(x.pass);
    for (const auto& x : r.checks) CHECK(x.pass);
    CHECK(r.config_hash.size() == 64);
}

TEST_CASE("reports are deterministic") {
    RunConfig c = light();
    c.threads = 4;
    const RunReport a = run(c);
    CHECK(without_wall_time(report_json(a)) == without_wall_time(report_json(light_all())));

    apply_seed(c, c.seed + 1);
    const RunReport b = run(c);
    CHECK(b.config_hash != a.config_hash);
    CHECK(b.identities[0].samples[0].Z != a.identities[0].samples[0].Z);
}

TEST_CASE("emit and reload") {
    const RunReport& r = light_all();
    const auto dir = scratch("emit");
    emit_report(r, dir);
    const std::string first = slurp(dir / "report.json"), csv = slurp(dir / "residuals.csv");
    emit_report(r, dir);
    CHECK(slurp(dir / "report.json") == first);
    CHECK(slurp(dir / "residuals.csv") == csv);

    const json j = json::parse(first);
    CHECK(j.at("schema_version") == kReportSchemaVersion);

    std::size_t total = 0;
    for (const auto* list : {&r.identities, &r.checks})
        for (const auto& x : *list) total += x.sample_count();
    std::size_t rows = 0;
    std::istringstream lines(csv);
    for (std::string line; std::getline(lines, line);) ++rows;
    CHECK(rows == total + 1);

    const RunReport back = load_report(dir);
    CHECK(report_json(back) == report_json(r));
    for (std::size_t i = 0; i < r.identities.size(); ++i) {
        const auto &x = r.identities[i].samples, &y = back.identities[i].samples;
        REQUIRE(x.size() == y.size());
        for (std::size_t k = 0; k < x.size(); ++k) {
            CHECK(x[k].residual == y[k].residual);
            CHECK(x[k].n == y[k].n);
            CHECK(x[k].nu == y[k].nu);
            CHECK(x[k].Z == y[k].Z);
        }
    }

    json bad = j;
    bad["schema_version"] = kReportSchemaVersion + 1;
    CHECK_THROWS_AS(report_from(bad), Error);
}

TEST_CASE("unwritable output directory") {
    try {
        emit_report(light_all(), "/proc/prymlab_cannot_write_here");
        FAIL("no error");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::IoError);
        CHECK(exit_code(e.code()) == 2);
    }
    CHECK(exit_code(Errc::ConfigError) == 2);
    CHECK(exit_code(Errc::NonInvertibleLeading) == 3);
}

TEST_CASE("negative control") {
    const RunConfig c = light();

    SECTION("zero perturbation reproduces all") {
        const RunReport z = negative_control(c, 0.0);
        json a = without_wall_time(report_json(light_all())), b = without_wall_time(report_json(z));
        CHECK(b["details"]["negative_control"]["verdict"] == "indistinguishable at tolerance");
        b["details"].erase("negative_control");
        b["command"] = a["command"];
        CHECK(a == b);
    }

    SECTION("1e-3 breaks every identity") {
        const RunReport r = negative_control(c, 1e-3);
        CHECK_FALSE(r.pass);
        CHECK(exit_code(r) == 1);
        for (const auto& x : r.identities) {
            INFO(x.identity);
            CHECK(x.max_rel_residual > 10.0 * x.tolerance);
        }
        // the consistency checks do not depend on the Prym property
        for (const auto& x : r.checks) CHECK(x.pass);
        CHECK(r.details["negative_control"]["verdict"] == "every identity fails by more than 10x its tolerance");
    }

    SECTION("1e-12 is below the tolerances") {
        const RunReport r = negative_control(c, 1e-12);
        CHECK(r.details["negative_control"]["verdict"] == "indistinguishable at tolerance");
        CHECK(r.pass);
    }

    CHECK_THROWS_AS(negative_control(c, -1.0), Error);
}

TEST_CASE("single-identity commands") {
    for (const char* t : {"A", "five-term", "four-point"}) {
        RunConfig c = light("verify");
        c.target = t;
        const RunReport r = run(c);
        CHECK(r.pass);
        CHECK(r.identities.size() + r.checks.size() == 1);
    }
    RunConfig c = light("verify");
    c.target = "Z";
    CHECK_THROWS_AS(run(c), Error);

    const RunReport p = run(light("periods"));
    CHECK(p.pass);
    CHECK(p.details.contains("periods"));
    CHECK_FALSE(p.constants.has_value());

    const RunReport d = run(light("prym-data"));
    const PrymData back = io::prym_data_from(d.details["prym_data"]);
    CHECK(back.marked_x[1] == cplx(0.7, 0.2));

    const RunReport k = run(light("recover-constants"));
    CHECK(k.pass);
    CHECK(k.constants->c3 == light_all().constants->c3);

    const RunReport nv = run(light("nv-check"));
    CHECK(nv.pass);
    CHECK(nv.identities.size() == 1);
    CHECK(nv.checks.size() == 5);
}
