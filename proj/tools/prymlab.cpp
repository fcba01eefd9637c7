#include <prymlab/harness.hpp>

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
    using namespace prymlab;
    CLI::App app{"Run verification suites on Prym data from a JSON config"};
    std::string command, target, config, out;
    int threads = 0;
    std::uint64_t seed = 0;
    app.add_option("command", command,
                   "periods | prym-data | verify | recover-constants | nv-check | negative-control | all")
        ->required();
    app.add_option("target", target, "identity for verify: A | B | C | quad | five-term | tau | recursion | four-point");
    app.add_option("--config", config, "JSON run configuration")->required();
    app.add_option("--out", out, "output directory for report.json and residuals.csv")->required();
    auto* threads_opt = app.add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
    auto* seed_opt = app.add_option("--seed-override", seed, "replace the seed from the config");
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return e.get_exit_code() == 0 ? app.exit(e) : (app.exit(e), 2);
    }

    try {
        RunConfig c = load_config(config);
        c.command = command;
        if (command == "verify")
            c.target = target;
        else if (!target.empty())
            throw Error(Errc::ConfigError, "unexpected argument '" + target + "' for " + command);
        if (*threads_opt) c.threads = threads;
        if (*seed_opt) apply_seed(c, seed);
        const RunReport r = run(c);
        emit_report(r, out);
        std::cout << r.command << ": " << (r.pass ? "pass" : "fail") << '\n';
        for (const auto* list : {&r.identities, &r.checks})
            for (const auto& x : *list)
                std::cout << "  " << x.identity << "  max " << x.max_rel_residual << "  tol " << x.tolerance << "  "
                          << (x.pass ? "pass" : "FAIL") << '\n';
        if (r.details.contains("negative_control"))
            std::cout << "  verdict: " << r.details["negative_control"]["verdict"].get<std::string>() << '\n';
        return exit_code(r);
    } catch (const Error& e) {
        std::cerr << "prymlab: " << e.what() << '\n';
        return exit_code(e.code());
    } catch (const std::exception& e) {
        std::cerr << "prymlab: " << e.what() << '\n';
        return 3;
    }
}
