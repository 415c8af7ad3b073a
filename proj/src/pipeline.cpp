#include "cwf/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <future>
#include <iomanip>
#include <mutex>
#include <sstream>

#include "cwf/error.hpp"
#include "cwf/fetch.hpp"
#include "cwf/format.hpp"
#include "cwf/metrics.hpp"
#include "cwf/svg.hpp"
#include "cwf/synthetic.hpp"
#include "cwf/time.hpp"

namespace cwf {

namespace fs = std::filesystem;

namespace {

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("cannot open '" + path.string() + "'");
    }
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::uint64_t fnv1a(std::string_view text, std::uint64_t h = 14695981039346656037ull) {
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::string hex(std::uint64_t v) {
    std::ostringstream out;
    out << std::hex << std::setw(16) << std::setfill('0') << v;
    return out.str();
}

Timestamp require_time(const std::string& text, const std::string& what) {
    const auto t = parse_iso8601(text);
    if (!t) {
        throw ConfigError(what + " '" + text + "' is not an ISO-8601 timestamp");
    }
    return *t;
}

// Everything that determines the candles and feature matrix, and nothing else.
std::string data_key(const RunConfig& config) {
    RunConfig key;
    key.data = config.data;
    key.threshold = config.threshold;
    key.indicators = config.indicators;
    key.features = config.features;
    key.seed = config.seed;
    key.output_dir = "-";
    std::uint64_t h = fnv1a(config_to_toml(key));
    if (config.data.source == "file") {
        h = fnv1a(read_file(config.data.path), h);
    }
    return hex(h);
}

std::string utc_now() {
    const auto now = std::chrono::floor<std::chrono::seconds>(std::chrono::system_clock::now());
    return format_iso8601(Timestamp{now.time_since_epoch()});
}

std::mutex audit_mutex;

void audit(const fs::path& dir, const std::string& line) {
    std::lock_guard lock(audit_mutex);
    std::ofstream out(dir / "audit.log", std::ios::app);
    out << utc_now() << ' ' << line << '\n';
}

template <typename Writer>
std::string render(Writer&& writer) {
    std::ostringstream out;
    writer(out);
    return out.str();
}

std::string dump(const nlohmann::json& doc) { return doc.dump(2) + "\n"; }

std::string json_number(const std::optional<double>& v) { return v ? format_double(*v) : "NA"; }

nlohmann::json optional_json(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(); }

std::string date_of(Timestamp t) { return format_iso8601(t).substr(0, 10); }

std::vector<RepairEntry> repairs_from_json(const nlohmann::json& doc) {
    std::vector<RepairEntry> out;
    for (const auto& e : doc) {
        out.push_back({require_time(e.at("timestamp").get<std::string>(), "repair timestamp"),
                       e.at("action").get<std::string>()});
    }
    return out;
}

std::string equity_plot(const BacktestResult& result) {
    std::vector<std::string> labels;
    std::vector<double> strategy;
    labels.reserve(result.bars());
    strategy.reserve(result.bars());
    for (std::size_t i = 0; i < result.bars(); ++i) {
        labels.push_back(date_of(result.timestamps[i]));
        strategy.push_back(result.equity[i] * 100.0 / result.config.initial_cash);
    }
    return svg_line_chart("Growth of 100: strategy vs market", labels,
                          {{"strategy", "#1f77b4", strategy}, {"market", "#ff7f0e", result.market_value_of_100()}});
}

std::string monthly_plot(const MonthlySummary& summary) {
    std::vector<std::string> labels;
    std::vector<double> values;
    for (const auto& m : summary.months) {
        labels.push_back(date_of(m.start));
        values.push_back(m.strategy_return);
    }
    return svg_bar_chart("Monthly strategy return", labels, values);
}

// Files shared by `backtest` and every sweep grid point.
void write_strategy_outputs(OutputStage& stage, const std::string& prefix, const BacktestResult& result,
                            const MonthlySummary& summary) {
    stage.write(prefix + "trades.csv", render([&](std::ostream& o) { write_trade_ledger(o, result.trades); }));
    stage.write(prefix + "equity.csv", render([&](std::ostream& o) { write_equity_curve(o, result); }));
    stage.write(prefix + "summary.json", dump(summary_json(summary, result)));
}

const std::vector<std::string>& sweep_header() {
    static const std::vector<std::string> h = {"rank",   "gamma",      "c",          "status", "net_return",
                                               "market_return", "monthly_volatility", "ppv", "npv", "trades"};
    return h;
}

}  // namespace

std::vector<RunConfig> expand_symbols(const RunConfig& config) {
    if (config.data.paths.empty()) {
        return {config};
    }
    std::vector<RunConfig> out;
    for (const auto& [symbol, path] : config.data.paths) {
        RunConfig c = config;
        c.data.paths.clear();
        c.data.symbol = symbol;
        c.data.path = path;
        c.output_dir = (fs::path(config.output_dir) / symbol).string();
        out.push_back(std::move(c));
    }
    return out;
}

RepairResult acquire_series(const RunConfig& config) {
    const auto& d = config.data;
    if (d.source == "file") {
        CandleFileFormat format;
        format.symbol = d.symbol;
        return validate_and_repair(load_candles(d.path, format), d.repair);
    }
    if (d.source == "coinbase") {
        const auto start = require_time(d.start, "data.start");
        const auto end = require_time(d.end, "data.end");
        // fetch_remote_candles already repairs with the same policy; the second pass is a no-op check.
        return validate_and_repair(fetch_remote_candles(d.symbol, start, end, d.endpoint, d.repair), d.repair);
    }
    if (d.source == "synthetic") {
        PlantedSignalOptions options;
        options.hours = d.synthetic_hours;
        options.start = require_time(d.synthetic_start, "data.synthetic.start");
        options.seed = config.seed;
        options.label_noise = d.synthetic_noise;
        options.threshold = config.threshold;
        options.mode = config.indicators.response_mode;
        CandleSeries series = planted_signal_series(options);
        series.symbol = d.symbol;
        return validate_and_repair(series, d.repair);
    }
    throw ConfigError("unknown data.source '" + d.source + "'");
}

PreparedData prepare_data(const RunConfig& config, const std::optional<fs::path>& cache_dir) {
    PreparedData data;
    bool loaded = false;
    std::string key;
    fs::path entry;
    if (cache_dir) {
        key = data_key(config);
        entry = *cache_dir / key;
        if (fs::exists(entry / "features.csv") && fs::exists(entry / "candles.csv") &&
            fs::exists(entry / "repairs.json")) {
            CandleFileFormat format;
            format.symbol = config.data.symbol;
            data.series = load_candles((entry / "candles.csv").string(), format);
            std::ifstream features(entry / "features.csv");
            data.features = read_feature_matrix(features);
            data.repairs = repairs_from_json(nlohmann::json::parse(read_file(entry / "repairs.json")));
            loaded = true;
            audit(*cache_dir, "features " + key + " cache-hit");
        }
    }
    if (!loaded) {
        auto repaired = acquire_series(config);
        data.series = std::move(repaired.series);
        data.repairs = std::move(repaired.report);
        data.features = build_feature_matrix(data.series, config.indicators, config.features);
        if (cache_dir) {
            fs::create_directories(entry);
            // Written to temporaries and renamed so that a concurrent reader never sees half a file.
            const auto put = [&](const std::string& name, const std::string& content) {
                const fs::path tmp = entry / (name + ".tmp");
                {
                    std::ofstream out(tmp, std::ios::binary);
                    out << content;
                }
                fs::rename(tmp, entry / name);
            };
            put("candles.csv", render([&](std::ostream& o) { write_candles(o, data.series); }));
            put("features.csv", render([&](std::ostream& o) { write_feature_matrix(o, data.features); }));
            put("repairs.json", dump(repair_report_json(data.repairs)));
            audit(*cache_dir, "features " + key + " computed");
        }
    }
    data.responses = compute_response(data.series, config.indicators.response_mode);
    data.labeled = build_labeled_dataset(data.features, data.responses, config.threshold);
    return data;
}

OutputStage::OutputStage(fs::path target) : target_(fs::absolute(std::move(target)).lexically_normal()) {
    if (target_.filename().empty()) {
        target_ = target_.parent_path();
    }
    staging_ = target_.parent_path() / ("." + target_.filename().string() + ".staging");
    fs::remove_all(staging_);
    fs::create_directories(staging_);
}

OutputStage::~OutputStage() {
    if (!committed_) {
        std::error_code ec;
        fs::remove_all(staging_, ec);
    }
}

void OutputStage::write(const std::string& relative, const std::string& content) {
    const fs::path path = staging_ / relative;
    fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    out << content;
    out.close();
    if (!out) {
        throw Error("failed to write '" + path.string() + "'");
    }
    files_.push_back(relative);
}

void OutputStage::commit() {
    for (const auto& f : files_) {
        const fs::path path = staging_ / f;
        if (!fs::exists(path) || fs::file_size(path) == 0) {
            throw Error("output '" + f + "' is missing or empty");
        }
    }
    fs::create_directories(target_);
    for (const auto& f : files_) {
        const fs::path dest = target_ / f;
        fs::create_directories(dest.parent_path());
        fs::rename(staging_ / f, dest);
    }
    committed_ = true;
    fs::remove_all(staging_);
}

PipelineRun run_pipeline(const RunConfig& config, const std::optional<std::string>& predictions_path,
                         const std::optional<fs::path>& cache_dir) {
    PipelineRun run;
    run.data = prepare_data(config, cache_dir);
    if (run.data.features.size() == 0) {
        throw ValidationError("no feature rows after warmup");
    }
    PredictionStream stream;
    if (predictions_path) {
        std::ifstream in(*predictions_path);
        if (!in) {
            throw Error("cannot open predictions file '" + *predictions_path + "'");
        }
        stream = read_prediction_stream(in);
    } else {
        const Timestamp start = run.data.series.candles.front().timestamp;
        const Timestamp end = run.data.features.timestamps.back() + kHour;
        run.schedule = make_schedule(start, end, config.schedule);
        WalkForwardConfig wf = config.walkforward;
        wf.gamma = config.strategy.gamma;
        wf.jobs = config.jobs;
        run.walkforward = run_walkforward(run.data.labeled, run.data.features, run.schedule, wf);
        stream = run.walkforward.stream;
    }
    run.backtest = run_backtest(stream, run.data.series, config.strategy);
    run.summary = summarize(run.backtest, config.schedule.anchor_day);
    run.walkforward.stream = std::move(stream);
    return run;
}

void cmd_ingest(const RunConfig& base) {
    for (const auto& config : expand_symbols(base)) {
        const auto repaired = acquire_series(config);
        OutputStage stage(config.output_dir);
        stage.write("candles.csv", render([&](std::ostream& o) { write_candles(o, repaired.series); }));
        stage.write("repair_report.json", dump(repair_report_json(repaired.report)));
        stage.write("config.effective.toml", config_to_toml(config));
        stage.commit();
    }
}

void cmd_features(const RunConfig& base) {
    for (const auto& config : expand_symbols(base)) {
        const auto data = prepare_data(config, fs::path(config.output_dir) / "cache");
        OutputStage stage(config.output_dir);
        stage.write("features.csv", render([&](std::ostream& o) { write_feature_matrix(o, data.features); }));
        stage.write("labeled.csv", render([&](std::ostream& o) { write_labeled_dataset(o, data.labeled); }));
        stage.write("config.effective.toml", config_to_toml(config));
        stage.commit();
    }
}

void cmd_backtest(const RunConfig& base, const std::optional<std::string>& predictions_path) {
    for (const auto& config : expand_symbols(base)) {
        const auto run = run_pipeline(config, predictions_path, fs::path(config.output_dir) / "cache");
        const auto& stream = run.walkforward.stream;
        const auto& labeled = run.data.labeled;
        OutputStage stage(config.output_dir);

        stage.write("predictions.csv", render([&](std::ostream& o) { write_prediction_stream(o, stream); }));
        write_strategy_outputs(stage, "", run.backtest, run.summary);
        if (!predictions_path) {
            stage.write("walkforward.json", dump(epoch_reports_json(run.walkforward.epochs)));
            for (std::size_t e = 0; e < stream.models.size(); ++e) {
                if (stream.models[e]) {
                    std::ostringstream name;
                    name << "models/epoch_" << std::setw(2) << std::setfill('0') << e << ".json";
                    stage.write(name.str(), dump(model_to_json(*stream.models[e])));
                }
            }
        }

        const auto confusion = ppv_npv(stream, labeled, config.strategy.gamma);
        std::size_t trained = 0;
        for (const auto& ep : run.walkforward.epochs) {
            trained += ep.trained ? 1 : 0;
        }
        nlohmann::json metrics = {{"gamma", config.strategy.gamma},
                                  {"overall_accuracy", optional_json(overall_accuracy(stream, labeled))},
                                  {"confusion", confusion_json(confusion)},
                                  {"epochs_trained", trained},
                                  {"epochs_skipped", run.walkforward.epochs.size() - trained}};
        stage.write("metrics.json", dump(metrics));

        const auto gammas = config.report.gamma_grid.empty() ? default_gamma_grid() : config.report.gamma_grid;
        const auto rows = gamma_sweep(stream, labeled, gammas, config.schedule.anchor_day);
        stage.write("gamma_sweep_pooled.csv", render([&](std::ostream& o) { write_gamma_sweep(o, rows, "pooled"); }));
        stage.write("gamma_sweep_month_mean.csv",
                    render([&](std::ostream& o) { write_gamma_sweep(o, rows, "month_mean"); }));
        stage.write("gamma_sweep_by_month.csv",
                    render([&](std::ostream& o) { write_gamma_sweep(o, rows, "by_month"); }));

        const auto volatility = rolling_volatility(run.data.responses, config.report.volatility_window);
        const auto activity = activity_report(run.backtest, volatility,
                                              activity_period_from_string(config.report.activity_period),
                                              config.schedule.anchor_day);
        stage.write("activity.csv", render([&](std::ostream& o) { write_activity_report(o, activity); }));

        if (config.report.plots) {
            stage.write("equity.svg", equity_plot(run.backtest));
            stage.write("monthly_returns.svg", monthly_plot(run.summary));
        }
        stage.write("config.effective.toml", config_to_toml(config));
        stage.commit();
    }
}

void cmd_sweep(const RunConfig& base) {
    for (const auto& config : expand_symbols(base)) {
        const auto data = prepare_data(config, fs::path(config.output_dir) / "cache");
        if (data.features.size() == 0) {
            throw ValidationError("no feature rows after warmup");
        }
        const std::vector<double> gammas =
            config.sweep.gammas.empty() ? std::vector<double>{config.strategy.gamma} : config.sweep.gammas;
        std::vector<std::optional<double>> cs;
        if (config.sweep.cs.empty()) {
            cs.push_back(config.walkforward.fixed_c);
        } else {
            cs.assign(config.sweep.cs.begin(), config.sweep.cs.end());
        }

        const Timestamp start = data.series.candles.front().timestamp;
        const Timestamp end = data.features.timestamps.back() + kHour;
        const auto schedule = make_schedule(start, end, config.schedule);

        struct Point {
            double gamma = 0.0;
            std::optional<double> c;
            std::string status = "ok";
            BacktestResult result;
            MonthlySummary summary;
            ConfusionSummary confusion;
            std::optional<PredictionStream> stream;
        };
        std::vector<Point> points;
        for (const auto& c : cs) {
            for (double g : gammas) {
                Point p;
                p.gamma = g;
                p.c = c;
                points.push_back(std::move(p));
            }
        }

        // One walk-forward per C; every gamma re-thresholds the same scores.
        const std::size_t parallel = std::min<std::size_t>(std::max<std::size_t>(config.jobs, 1), cs.size());
        const std::size_t inner_jobs = std::max<std::size_t>(1, config.jobs / parallel);
        const auto run_c = [&](std::size_t ci) {
            WalkForwardConfig wf = config.walkforward;
            wf.fixed_c = cs[ci];
            wf.jobs = inner_jobs;
            wf.gamma = config.strategy.gamma;
            std::optional<WalkForwardResult> result;
            std::string failure;
            try {
                result = run_walkforward(data.labeled, data.features, schedule, wf);
            } catch (const std::exception& e) {
                failure = std::string("failed: ") + e.what();
            }
            for (std::size_t gi = 0; gi < gammas.size(); ++gi) {
                Point& p = points[ci * gammas.size() + gi];
                if (!result) {
                    p.status = failure;
                    continue;
                }
                try {
                    StrategyConfig strategy = config.strategy;
                    strategy.gamma = p.gamma;
                    p.stream = apply_gamma(result->stream, p.gamma);
                    p.result = run_backtest(*p.stream, data.series, strategy);
                    p.summary = summarize(p.result, config.schedule.anchor_day);
                    p.confusion = ppv_npv(*p.stream, data.labeled, p.gamma);
                } catch (const std::exception& e) {
                    p.status = std::string("failed: ") + e.what();
                    p.stream.reset();
                }
            }
        };
        for (std::size_t begin = 0; begin < cs.size(); begin += parallel) {
            std::vector<std::future<void>> batch;
            for (std::size_t ci = begin; ci < std::min(cs.size(), begin + parallel); ++ci) {
                batch.push_back(std::async(std::launch::async, run_c, ci));
            }
            for (auto& f : batch) {
                f.get();
            }
        }

        OutputStage stage(config.output_dir);
        std::vector<std::size_t> order(points.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            const bool ok_a = points[a].status == "ok";
            const bool ok_b = points[b].status == "ok";
            if (ok_a != ok_b) return ok_a;
            if (ok_a && points[a].result.total_return() != points[b].result.total_return()) {
                return points[a].result.total_return() > points[b].result.total_return();
            }
            return a < b;
        });

        std::ostringstream table;
        const auto& header = sweep_header();
        for (std::size_t i = 0; i < header.size(); ++i) table << (i ? "," : "") << header[i];
        table << '\n';
        std::size_t rank = 0;
        for (std::size_t idx : order) {
            const Point& p = points[idx];
            const std::string c_text = p.c ? format_double(*p.c) : "auto";
            std::string status = p.status;
            std::replace(status.begin(), status.end(), ',', ';');
            std::replace(status.begin(), status.end(), '\n', ' ');
            table << ++rank << ',' << format_double(p.gamma) << ',' << c_text << ',' << status << ',';
            if (p.status == "ok") {
                const auto market = p.result.market_value_of_100();
                const double market_return = market.empty() ? 0.0 : market.back() / 100.0 - 1.0;
                table << format_double(p.result.total_return()) << ',' << format_double(market_return) << ','
                      << format_double(p.summary.strategy_std) << ',' << json_number(p.confusion.ppv) << ','
                      << json_number(p.confusion.npv) << ',' << p.result.trades.size() << '\n';
                const std::string dir = "sweep/gamma_" + format_double(p.gamma) + "_c_" + c_text + "/";
                stage.write(dir + "predictions.csv",
                            render([&](std::ostream& o) { write_prediction_stream(o, *p.stream); }));
                write_strategy_outputs(stage, dir, p.result, p.summary);
            } else {
                table << "NA,NA,NA,NA,NA,NA\n";
            }
        }
        stage.write("sweep.csv", table.str());
        stage.write("config.effective.toml", config_to_toml(config));
        stage.commit();
    }
}

void cmd_report(const RunConfig& base) {
    for (const auto& config : expand_symbols(base)) {
        const auto data = prepare_data(config, fs::path(config.output_dir) / "cache");
        const auto& r = data.responses.values;
        const std::size_t lags = std::min<std::size_t>(config.report.acf_lags, r.size() > 2 ? r.size() - 2 : 0);
        if (lags == 0) {
            throw ValidationError("series too short for an autocorrelation report");
        }
        const auto a = acf(r, lags);
        const auto p = pacf_from_acf(a);
        const double band = 2.0 / std::sqrt(static_cast<double>(r.size()));
        std::size_t inside_acf = 0;
        std::size_t inside_pacf = 0;
        std::ostringstream acf_csv;
        acf_csv << "lag,acf,pacf,band\n";
        for (std::size_t k = 0; k <= lags; ++k) {
            acf_csv << k << ',' << format_double(a[k]) << ',' << format_double(p[k]) << ',' << format_double(band)
                    << '\n';
            if (k > 0) {
                inside_acf += std::abs(a[k]) <= band ? 1 : 0;
                inside_pacf += std::abs(p[k]) <= band ? 1 : 0;
            }
        }

        const auto proportions = rolling_class_proportions_calendar(data.labeled.timestamps, data.labeled.labels,
                                                                    config.report.proportion_months);
        std::ostringstream prop_csv;
        prop_csv << "timestamp,c1,c2,c3\n";
        for (std::size_t i = 0; i < proportions.timestamps.size(); ++i) {
            prop_csv << format_iso8601(proportions.timestamps[i]);
            for (double v : proportions.proportions[i]) prop_csv << ',' << format_double(v);
            prop_csv << '\n';
        }

        const auto volatility = rolling_volatility(data.responses, config.report.volatility_window);
        std::ostringstream vol_csv;
        vol_csv << "timestamp,volatility\n";
        for (std::size_t i = 0; i < volatility.timestamps.size(); ++i) {
            vol_csv << format_iso8601(volatility.timestamps[i]) << ',' << format_double(volatility.values[i]) << '\n';
        }

        const auto counts = data.labeled.class_counts;
        nlohmann::json report = {
            {"symbol", data.series.symbol},
            {"bars", data.series.size()},
            {"responses", r.size()},
            {"response_mode", to_string(config.indicators.response_mode)},
            {"threshold", config.threshold},
            {"class_counts", {{"c1", counts[0]}, {"c2", counts[1]}, {"c3", counts[2]}}},
            {"acf_band", band},
            {"acf_lags", lags},
            {"acf_fraction_within_band", static_cast<double>(inside_acf) / lags},
            {"pacf_fraction_within_band", static_cast<double>(inside_pacf) / lags},
            {"repairs", data.repairs.size()}};

        OutputStage stage(config.output_dir);
        stage.write("acf.csv", acf_csv.str());
        stage.write("class_proportions.csv", prop_csv.str());
        stage.write("volatility.csv", vol_csv.str());
        stage.write("report.json", dump(report));
        if (config.report.plots) {
            std::vector<std::string> labels;
            std::vector<double> values(a.begin() + 1, a.end());
            for (std::size_t k = 1; k <= lags; ++k) labels.push_back(std::to_string(k));
            stage.write("acf.svg", svg_bar_chart("Autocorrelation of hourly responses", labels, values));
        }
        stage.write("config.effective.toml", config_to_toml(config));
        stage.commit();
    }
}

}  // namespace cwf
