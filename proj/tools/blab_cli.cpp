// blab: command-line driver for the experiment harness.
//
//   blab generate|evolve|hmeasure|vlasov  run one pipeline stage of a WKB scenario
//   blab verify                           run scenarios and write their verdicts and a report
//   blab report                           summarise verdicts already under --out
//
// Exit status: 0 all non-control checks pass, 1 a check or a stage failed,
// 2 the configuration was rejected.

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "blab/harness.hpp"

namespace fs = std::filesystem;

namespace {

struct Options {
    std::string config, out, scenario;
    std::optional<std::uint64_t> seed;
    std::optional<int> levels, threads;
};

void add_common(CLI::App* app, Options& o) {
    app->add_option("--config", o.config, "INI configuration file")->check(CLI::ExistingFile);
    app->add_option("--out", o.out, "output directory");
    app->add_option("--seed", o.seed, "seed for stochastic sampling");
    app->add_option("--levels", o.levels, "ladder depth");
    app->add_option("--threads", o.threads, "worker threads inside stages");
}

blab::ExperimentConfig resolve(const Options& o, const std::string& fallback) {
    blab::ExperimentConfig c;
    if (!o.config.empty())
        c = blab::load_config(o.config);
    else
        c = blab::default_config(o.scenario.empty() ? fallback : o.scenario);
    if (!o.config.empty() && !o.scenario.empty() && o.scenario != c.scenario)
        throw blab::ConfigError("--scenario " + o.scenario + " disagrees with the configuration (" + c.scenario + ")");
    if (!o.out.empty()) c.out = o.out;
    if (o.seed) c.seed = *o.seed;
    if (o.levels) c.ladder.depth = *o.levels;
    if (o.threads) c.threads = *o.threads;
    blab::validate(c);
    return c;
}

std::vector<blab::RunRecord> collect(const std::string& out) {
    std::vector<fs::path> found;
    if (fs::is_directory(out))
        for (const auto& e : fs::directory_iterator(out))
            if (fs::is_regular_file(e.path() / "verdict.csv")) found.push_back(e.path() / "verdict.csv");
    std::sort(found.begin(), found.end());
    std::vector<blab::RunRecord> r;
    for (const auto& p : found) r.push_back(blab::read_record(p.string()));
    return r;
}

void list_files(const blab::ExperimentConfig& c, const std::vector<std::string>& files) {
    for (const auto& f : files) std::cout << (fs::path(c.out) / c.scenario / f).string() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"blab: defect-measure experiments for high-frequency waves"};
    app.require_subcommand(1);
    Options o;
    const char* stage_names[4] = {"generate", "evolve", "hmeasure", "vlasov"};
    const char* stage_help[4] = {"eikonal and transport solve; phase, amplitude and manifest",
                                 "evolve the coarsest member and compare with the WKB field",
                                 "H-measure estimate, finest level and reference histograms",
                                 "symbol residuals and the pushed oracle measure"};
    std::vector<CLI::App*> stages;
    for (int i = 0; i < 4; ++i) {
        stages.push_back(app.add_subcommand(stage_names[i], stage_help[i]));
        add_common(stages.back(), o);
        stages.back()->add_option("--scenario", o.scenario, "scenario whose defaults apply");
    }
    CLI::App* verify = app.add_subcommand("verify", "run scenarios (all by default) and write verdicts and a report");
    add_common(verify, o);
    verify->add_option("--scenario", o.scenario, "run only this scenario");
    bool list = false;
    verify->add_flag("--list", list, "list the registered scenarios and exit");
    CLI::App* rep = app.add_subcommand("report", "summarise the verdicts found under --out");
    rep->add_option("--out", o.out, "output directory holding <scenario>/verdict.csv");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        for (int i = 0; i < 4; ++i) {
            if (!stages[i]->parsed()) continue;
            const blab::ExperimentConfig c = resolve(o, "null-plane-wave-minkowski");
            const std::vector<std::string> files = i == 0   ? blab::stage_generate(c)
                                                   : i == 1 ? blab::stage_evolve(c)
                                                   : i == 2 ? blab::stage_hmeasure(c)
                                                            : blab::stage_vlasov(c);
            list_files(c, files);
            return 0;
        }
        if (verify->parsed()) {
            if (list) {
                for (const auto& s : blab::scenarios()) {
                    std::string crit;
                    for (int k : s.criteria) crit += (crit.empty() ? "" : ",") + std::to_string(k);
                    std::cout << s.name << "  [" << crit << "]  " << s.summary << "\n";
                }
                return 0;
            }
            std::vector<blab::ExperimentConfig> cfgs;
            if (!o.config.empty() || !o.scenario.empty())
                cfgs.push_back(resolve(o, ""));
            else
                for (const auto& s : blab::scenarios()) {
                    Options each = o;
                    each.scenario = s.name;
                    cfgs.push_back(resolve(each, s.name));
                }
            std::vector<blab::RunRecord> records;
            bool aborted = false;
            for (const auto& c : cfgs) {
                std::cerr << "running " << c.scenario << " ..." << std::endl;
                try {
                    records.push_back(blab::run(c));
                } catch (const blab::ConfigError&) {
                    throw;
                } catch (const std::exception& e) {
                    // keep going so one broken stage does not hide the other verdicts
                    std::cerr << "error: " << c.scenario << ": " << e.what() << "\n";
                    aborted = true;
                }
            }
            blab::write_report(cfgs.front().out, records);
            std::cout << blab::report(records).text;
            return aborted ? 1 : blab::exit_code(records);
        }
        const std::vector<blab::RunRecord> records = collect(o.out.empty() ? "out" : o.out);
        blab::write_report(o.out.empty() ? "out" : o.out, records);
        std::cout << blab::report(records).text;
        return blab::exit_code(records);
    } catch (const blab::ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
