#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cwf/config.hpp"
#include "cwf/error.hpp"
#include "cwf/pipeline.hpp"

namespace {

// Path-valued settings that may come from the environment. Flags win over these.
const std::vector<std::pair<const char*, const char*>> kPathEnv = {
    {"CWF_DATA", "data.path"},
    {"CWF_OUT", "output.dir"},
};

cwf::RunConfig resolve(const std::string& config_path, const std::vector<std::string>& overrides) {
    cwf::TomlTable table;
    if (!config_path.empty()) {
        std::ifstream in(config_path);
        if (!in) {
            throw cwf::ConfigError("cannot open config file '" + config_path + "'");
        }
        std::stringstream buf;
        buf << in.rdbuf();
        table = cwf::parse_toml(buf.str());
    }
    for (const auto& [var, key] : kPathEnv) {
        if (const char* value = std::getenv(var); value && *value) {
            cwf::TomlValue v;
            v.type = cwf::TomlValue::Type::string;
            v.string = value;
            table[key] = v;
        }
    }
    for (const auto& o : overrides) {
        cwf::apply_override(table, o);
    }
    return cwf::config_from_toml(table);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Walk-forward SVM backtester for hourly crypto candles"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    std::vector<std::string> overrides;
    long long seed = -1;
    int jobs = 0;
    app.add_option("--config,-c", config_path, "TOML run configuration");
    app.add_option("--out,-o", out_dir, "Output directory (overrides output.dir)");
    app.add_option("--seed", seed, "Seed for synthetic data generation")->check(CLI::NonNegativeNumber);
    app.add_option("--jobs,-j", jobs, "Parallel workers")->check(CLI::PositiveNumber);
    app.add_option("--set", overrides, "Override a setting: section.key=value (repeatable)");

    auto* ingest = app.add_subcommand("ingest", "Load or fetch candles, repair gaps, write candles.csv");
    auto* features = app.add_subcommand("features", "Compute indicator features and labels");
    auto* backtest = app.add_subcommand("backtest", "Walk-forward training, backtest and reports");
    std::string predictions;
    backtest->add_option("--predictions", predictions, "Use an external prediction stream CSV");
    auto* sweep = app.add_subcommand("sweep", "Grid over gamma and C");
    auto* report = app.add_subcommand("report", "Autocorrelation, class proportion and volatility reports");
    for (auto* sub : {ingest, features, backtest, sweep, report}) {
        sub->fallthrough();
    }

    CLI11_PARSE(app, argc, argv);

    try {
        if (!out_dir.empty()) overrides.push_back("output.dir=\"" + out_dir + "\"");
        if (seed >= 0) overrides.push_back("run.seed=" + std::to_string(seed));
        if (jobs > 0) overrides.push_back("run.jobs=" + std::to_string(jobs));
        const auto config = resolve(config_path, overrides);

        if (ingest->parsed()) {
            cwf::cmd_ingest(config);
        } else if (features->parsed()) {
            cwf::cmd_features(config);
        } else if (backtest->parsed()) {
            cwf::cmd_backtest(config, predictions.empty() ? std::nullopt : std::optional<std::string>(predictions));
        } else if (sweep->parsed()) {
            cwf::cmd_sweep(config);
        } else if (report->parsed()) {
            cwf::cmd_report(config);
        }
    } catch (const cwf::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
