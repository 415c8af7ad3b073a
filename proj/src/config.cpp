#include "cwf/config.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <type_traits>

#include "cwf/error.hpp"
#include "cwf/format.hpp"
#include "cwf/metrics.hpp"
#include "cwf/time.hpp"

namespace cwf {

namespace {

std::string strip_comment(const std::string& line) {
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '"' && (i == 0 || line[i - 1] != '\\')) {
            quoted = !quoted;
        } else if (line[i] == '#' && !quoted) {
            return line.substr(0, i);
        }
    }
    return line;
}

int bracket_depth(const std::string& text) {
    int depth = 0;
    bool quoted = false;
    for (char c : text) {
        if (c == '"') quoted = !quoted;
        if (quoted) continue;
        if (c == '[') ++depth;
        if (c == ']') --depth;
    }
    return depth;
}

class ValueParser {
public:
    explicit ValueParser(std::string_view text) : text_(text) {}

    TomlValue parse_all() {
        TomlValue v = parse();
        skip_space();
        if (pos_ != text_.size()) {
            throw ConfigError("unexpected text after value: '" + std::string(text_.substr(pos_)) + "'");
        }
        return v;
    }

private:
    void skip_space() {
        while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\t' || text_[pos_] == '\n' ||
                                       text_[pos_] == '\r')) {
            ++pos_;
        }
    }

    TomlValue parse() {
        skip_space();
        if (pos_ >= text_.size()) {
            throw ConfigError("missing value");
        }
        TomlValue v;
        const char c = text_[pos_];
        if (c == '"') {
            v.type = TomlValue::Type::string;
            ++pos_;
            while (pos_ < text_.size() && text_[pos_] != '"') {
                if (text_[pos_] == '\\' && pos_ + 1 < text_.size()) {
                    ++pos_;
                    const char e = text_[pos_];
                    v.string.push_back(e == 'n' ? '\n' : e == 't' ? '\t' : e);
                } else {
                    v.string.push_back(text_[pos_]);
                }
                ++pos_;
            }
            if (pos_ >= text_.size()) {
                throw ConfigError("unterminated string");
            }
            ++pos_;
            return v;
        }
        if (c == '[') {
            v.type = TomlValue::Type::array;
            ++pos_;
            skip_space();
            if (pos_ < text_.size() && text_[pos_] == ']') {
                ++pos_;
                return v;
            }
            while (true) {
                v.array.push_back(parse());
                skip_space();
                if (pos_ < text_.size() && text_[pos_] == ',') {
                    ++pos_;
                    skip_space();
                    if (pos_ < text_.size() && text_[pos_] == ']') {
                        ++pos_;
                        return v;
                    }
                    continue;
                }
                if (pos_ < text_.size() && text_[pos_] == ']') {
                    ++pos_;
                    return v;
                }
                throw ConfigError("malformed array");
            }
        }
        std::size_t end = pos_;
        while (end < text_.size() && text_[end] != ',' && text_[end] != ']' && text_[end] != ' ' &&
               text_[end] != '\t' && text_[end] != '\n' && text_[end] != '\r') {
            ++end;
        }
        const std::string_view word = text_.substr(pos_, end - pos_);
        pos_ = end;
        if (word == "true" || word == "false") {
            v.type = TomlValue::Type::boolean;
            v.boolean = word == "true";
            return v;
        }
        std::string digits;
        for (char ch : word) {
            if (ch != '_') digits.push_back(ch);
        }
        const auto number = parse_double(digits);
        if (!number) {
            throw ConfigError("malformed value '" + std::string(word) + "'");
        }
        v.type = TomlValue::Type::number;
        v.number = *number;
        return v;
    }

    std::string_view text_;
    std::size_t pos_ = 0;
};

std::string quote(const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
        if (c == '"' || c == '\\') out.push_back('\\');
        out.push_back(c);
    }
    return out + "\"";
}

std::string number_list(const std::vector<double>& values) {
    std::string out = "[";
    for (std::size_t i = 0; i < values.size(); ++i) {
        out += (i ? ", " : "") + format_double(values[i]);
    }
    return out + "]";
}

class Reader {
public:
    explicit Reader(const TomlTable& table) : table_(table) {}

    const TomlValue* find(const std::string& key) {
        used_.insert(key);
        const auto it = table_.find(key);
        return it == table_.end() ? nullptr : &it->second;
    }

    void number(const std::string& key, double& out) {
        if (const auto* v = find(key)) {
            if (v->type != TomlValue::Type::number) throw ConfigError(key + " must be a number");
            out = v->number;
        }
    }

    template <typename Int>
    void integer(const std::string& key, Int& out) {
        if (const auto* v = find(key)) {
            if (v->type != TomlValue::Type::number || v->number != std::floor(v->number) ||
                (std::is_unsigned_v<Int> && v->number < 0)) {
                throw ConfigError(key + " must be a " + (std::is_unsigned_v<Int> ? "non-negative " : "") +
                                  "integer");
            }
            out = static_cast<Int>(v->number);
        }
    }

    void string(const std::string& key, std::string& out) {
        if (const auto* v = find(key)) {
            if (v->type != TomlValue::Type::string) throw ConfigError(key + " must be a string");
            out = v->string;
        }
    }

    void boolean(const std::string& key, bool& out) {
        if (const auto* v = find(key)) {
            if (v->type != TomlValue::Type::boolean) throw ConfigError(key + " must be true or false");
            out = v->boolean;
        }
    }

    void numbers(const std::string& key, std::vector<double>& out) {
        if (const auto* v = find(key)) {
            if (v->type != TomlValue::Type::array) throw ConfigError(key + " must be an array of numbers");
            out.clear();
            for (const auto& e : v->array) {
                if (e.type != TomlValue::Type::number) throw ConfigError(key + " must be an array of numbers");
                out.push_back(e.number);
            }
        }
    }

    void strings(const std::string& key, std::optional<std::vector<std::string>>& out) {
        if (const auto* v = find(key)) {
            if (v->type != TomlValue::Type::array) throw ConfigError(key + " must be an array of strings");
            out.emplace();
            for (const auto& e : v->array) {
                if (e.type != TomlValue::Type::string) throw ConfigError(key + " must be an array of strings");
                out->push_back(e.string);
            }
        }
    }

    std::map<std::string, std::string> strings_under(const std::string& prefix) {
        std::map<std::string, std::string> out;
        for (const auto& [key, value] : table_) {
            if (key.rfind(prefix, 0) == 0 && key.size() > prefix.size()) {
                used_.insert(key);
                if (value.type != TomlValue::Type::string) throw ConfigError(key + " must be a string");
                out[key.substr(prefix.size())] = value.string;
            }
        }
        return out;
    }

    void reject_unknown() const {
        for (const auto& [key, value] : table_) {
            if (!used_.count(key)) {
                throw ConfigError("unknown configuration key '" + key + "'");
            }
        }
    }

private:
    const TomlTable& table_;
    std::set<std::string> used_;
};

}  // namespace

TomlValue parse_toml_value(const std::string& text) { return ValueParser(text).parse_all(); }

TomlTable parse_toml(const std::string& text) {
    TomlTable table;
    std::istringstream in(text);
    std::string raw;
    std::string section;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string line(trim(strip_comment(raw)));
        if (line.empty()) {
            continue;
        }
        if (line.front() == '[' && line.find('=') == std::string::npos) {
            if (line.back() != ']') {
                throw ConfigError("line " + std::to_string(line_no) + ": malformed section header");
            }
            section = std::string(trim(std::string_view(line).substr(1, line.size() - 2)));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
        }
        const std::string key(trim(std::string_view(line).substr(0, eq)));
        std::string value(trim(std::string_view(line).substr(eq + 1)));
        const std::size_t start_line = line_no;
        while (bracket_depth(value) > 0 && std::getline(in, raw)) {
            ++line_no;
            value += "\n" + std::string(trim(strip_comment(raw)));
        }
        const std::string full = section.empty() ? key : section + "." + key;
        try {
            if (!table.emplace(full, parse_toml_value(value)).second) {
                throw ConfigError("duplicate key");
            }
        } catch (const ConfigError& e) {
            throw ConfigError("line " + std::to_string(start_line) + " (" + full + "): " + e.what());
        }
    }
    return table;
}

void apply_override(TomlTable& table, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) {
        throw ConfigError("override '" + assignment + "' must look like section.key=value");
    }
    const std::string key(trim(std::string_view(assignment).substr(0, eq)));
    const std::string text(trim(std::string_view(assignment).substr(eq + 1)));
    TomlValue value;
    try {
        value = parse_toml_value(text);
    } catch (const ConfigError&) {
        value.type = TomlValue::Type::string;
        value.string = text;
    }
    table[key] = value;
}

void RunConfig::validate() const {
    if (data.source != "file" && data.source != "coinbase" && data.source != "synthetic") {
        throw ConfigError("data.source must be file, coinbase or synthetic");
    }
    if (data.source == "file") {
        if (data.path.empty() && data.paths.empty()) {
            throw ConfigError("data.path (or a [data.paths] table) is required for source = \"file\"");
        }
        if (!data.path.empty() && !std::filesystem::exists(data.path)) {
            throw ConfigError("data.path '" + data.path + "' does not exist");
        }
        for (const auto& [symbol, path] : data.paths) {
            if (!std::filesystem::exists(path)) {
                throw ConfigError("data.paths." + symbol + " '" + path + "' does not exist");
            }
        }
    } else if (!data.paths.empty()) {
        throw ConfigError("[data.paths] is only valid with source = \"file\"");
    }
    if (data.source == "coinbase") {
        if (!parse_iso8601(data.start) || !parse_iso8601(data.end)) {
            throw ConfigError("data.start and data.end must be ISO-8601 timestamps for source = \"coinbase\"");
        }
    }
    if (data.source == "synthetic") {
        if (!parse_iso8601(data.synthetic_start)) throw ConfigError("data.synthetic.start must be ISO-8601");
        if (data.synthetic_hours < 2) throw ConfigError("data.synthetic.hours must be >= 2");
        if (!(data.synthetic_noise >= 0.0 && data.synthetic_noise <= 1.0)) {
            throw ConfigError("data.synthetic.noise must be in [0, 1]");
        }
    }
    if (data.repair.max_fill_hours < 0) throw ConfigError("data.repair.max_gap_hours must be >= 0");
    if (!(threshold > 0.0)) throw ConfigError("labels.threshold must be > 0");
    indicators.validate();
    if (features.empty()) throw ConfigError("features.selection is empty");
    if (schedule.window_months < 1 || schedule.retrain_months < 1) {
        throw ConfigError("walkforward window and retrain period must be >= 1 month");
    }
    if (schedule.anchor_day < 1 || schedule.anchor_day > 28) throw ConfigError("walkforward.anchor_day in [1, 28]");
    if (walkforward.c_grid.empty()) throw ConfigError("svm.c_grid is empty");
    for (double c : walkforward.c_grid) {
        if (!(c > 0.0)) throw ConfigError("svm.c_grid values must be > 0");
    }
    if (walkforward.fixed_c && !(*walkforward.fixed_c > 0.0)) throw ConfigError("svm.fixed_c must be > 0");
    if (!(walkforward.validation_fraction > 0.0 && walkforward.validation_fraction < 1.0)) {
        throw ConfigError("svm.validation_fraction must be in (0, 1)");
    }
    if (walkforward.solver.max_iterations < 1) throw ConfigError("svm.max_iterations must be >= 1");
    strategy.validate();
    for (double g : report.gamma_grid) {
        if (!(g >= 0.0)) throw ConfigError("report.gamma_grid values must be >= 0");
    }
    // Sweep grid values are checked per grid point so that one bad value is
    // recorded as a failed row instead of aborting the whole sweep.
    if (report.volatility_window < 2) throw ConfigError("report.volatility_window must be >= 2");
    if (report.acf_lags < 1) throw ConfigError("report.acf_lags must be >= 1");
    if (report.proportion_months < 1) throw ConfigError("report.proportion_months must be >= 1");
    activity_period_from_string(report.activity_period);
    if (output_dir.empty()) throw ConfigError("output.dir is empty");
    if (jobs < 1) throw ConfigError("run.jobs must be >= 1");
}

RunConfig config_from_toml(const TomlTable& table) {
    RunConfig c;
    Reader r(table);
    r.string("data.symbol", c.data.symbol);
    r.string("data.source", c.data.source);
    r.string("data.path", c.data.path);
    c.data.paths = r.strings_under("data.paths.");
    r.string("data.start", c.data.start);
    r.string("data.end", c.data.end);
    std::string policy = "forward_fill";
    r.string("data.repair.policy", policy);
    if (policy == "forward_fill") {
        c.data.repair.action = GapAction::forward_fill;
    } else if (policy == "reject") {
        c.data.repair.action = GapAction::reject;
    } else {
        throw ConfigError("data.repair.policy must be forward_fill or reject");
    }
    r.integer("data.repair.max_gap_hours", c.data.repair.max_fill_hours);
    r.string("data.endpoint.base_url", c.data.endpoint.base_url);
    r.string("data.endpoint.product", c.data.endpoint.product);
    r.integer("data.endpoint.page_size", c.data.endpoint.page_size);
    r.integer("data.endpoint.retries", c.data.endpoint.retries);
    long backoff_ms = c.data.endpoint.backoff.count();
    long timeout_ms = c.data.endpoint.timeout.count();
    r.integer("data.endpoint.backoff_ms", backoff_ms);
    r.integer("data.endpoint.timeout_ms", timeout_ms);
    c.data.endpoint.backoff = std::chrono::milliseconds{backoff_ms};
    c.data.endpoint.timeout = std::chrono::milliseconds{timeout_ms};
    r.integer("data.synthetic.hours", c.data.synthetic_hours);
    r.number("data.synthetic.noise", c.data.synthetic_noise);
    r.string("data.synthetic.start", c.data.synthetic_start);

    r.number("labels.threshold", c.threshold);
    std::string response = to_string(c.indicators.response_mode);
    r.string("labels.response", response);
    c.indicators.response_mode = response_mode_from_string(response);

    r.integer("features.bollinger_window", c.indicators.bollinger_window);
    r.integer("features.macd_fast", c.indicators.macd_fast);
    r.integer("features.macd_slow", c.indicators.macd_slow);
    r.integer("features.macd_signal", c.indicators.macd_signal);
    r.integer("features.rsi_window", c.indicators.rsi_window);
    std::optional<std::vector<std::string>> selection;
    r.strings("features.selection", selection);
    if (selection) {
        c.features.clear();
        for (const auto& s : *selection) {
            if (s == "default") {
                const auto d = default_feature_selection();
                c.features.insert(c.features.end(), d.begin(), d.end());
            } else {
                c.features.push_back(FeatureSpec::parse(s));
            }
        }
    }

    r.integer("walkforward.window_months", c.schedule.window_months);
    r.integer("walkforward.retrain_months", c.schedule.retrain_months);
    r.integer("walkforward.anchor_day", c.schedule.anchor_day);

    r.numbers("svm.c_grid", c.walkforward.c_grid);
    if (const auto* v = r.find("svm.fixed_c")) {
        if (v->type != TomlValue::Type::number) throw ConfigError("svm.fixed_c must be a number");
        c.walkforward.fixed_c = v->number;
    }
    r.number("svm.validation_fraction", c.walkforward.validation_fraction);
    r.integer("svm.max_iterations", c.walkforward.solver.max_iterations);
    r.number("svm.tolerance", c.walkforward.solver.gradient_tolerance);

    r.number("strategy.gamma", c.strategy.gamma);
    r.number("strategy.take_profit", c.strategy.take_profit);
    r.number("strategy.stop_loss", c.strategy.stop_loss);
    r.number("strategy.fee", c.strategy.fee);
    r.number("strategy.initial_cash", c.strategy.initial_cash);
    c.walkforward.gamma = c.strategy.gamma;

    r.numbers("report.gamma_grid", c.report.gamma_grid);
    r.integer("report.volatility_window", c.report.volatility_window);
    r.integer("report.acf_lags", c.report.acf_lags);
    r.integer("report.proportion_months", c.report.proportion_months);
    r.string("report.activity_period", c.report.activity_period);
    r.boolean("report.plots", c.report.plots);

    r.numbers("sweep.gamma", c.sweep.gammas);
    r.numbers("sweep.c", c.sweep.cs);

    r.string("output.dir", c.output_dir);
    r.integer("run.jobs", c.jobs);
    r.integer("run.seed", c.seed);
    c.walkforward.jobs = c.jobs;
    r.reject_unknown();
    c.validate();
    return c;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config file '" + path + "'");
    }
    std::stringstream buf;
    buf << in.rdbuf();
    return config_from_toml(parse_toml(buf.str()));
}

std::string config_to_toml(const RunConfig& c) {
    std::ostringstream out;
    out << "# effective configuration (defaults resolved)\n\n";
    out << "[data]\n";
    out << "symbol = " << quote(c.data.symbol) << '\n';
    out << "source = " << quote(c.data.source) << '\n';
    out << "path = " << quote(c.data.path) << '\n';
    out << "start = " << quote(c.data.start) << '\n';
    out << "end = " << quote(c.data.end) << "\n\n";
    if (!c.data.paths.empty()) {
        out << "[data.paths]\n";
        for (const auto& [symbol, path] : c.data.paths) {
            out << symbol << " = " << quote(path) << '\n';
        }
        out << '\n';
    }
    out << "[data.repair]\n";
    out << "policy = " << quote(c.data.repair.action == GapAction::forward_fill ? "forward_fill" : "reject") << '\n';
    out << "max_gap_hours = " << c.data.repair.max_fill_hours << "\n\n";
    out << "[data.endpoint]\n";
    out << "base_url = " << quote(c.data.endpoint.base_url) << '\n';
    out << "product = " << quote(c.data.endpoint.product) << '\n';
    out << "page_size = " << c.data.endpoint.page_size << '\n';
    out << "retries = " << c.data.endpoint.retries << '\n';
    out << "backoff_ms = " << c.data.endpoint.backoff.count() << '\n';
    out << "timeout_ms = " << c.data.endpoint.timeout.count() << "\n\n";
    out << "[data.synthetic]\n";
    out << "hours = " << c.data.synthetic_hours << '\n';
    out << "noise = " << format_double(c.data.synthetic_noise) << '\n';
    out << "start = " << quote(c.data.synthetic_start) << "\n\n";
    out << "[labels]\n";
    out << "threshold = " << format_double(c.threshold) << '\n';
    out << "response = " << quote(to_string(c.indicators.response_mode)) << "\n\n";
    out << "[features]\n";
    out << "bollinger_window = " << c.indicators.bollinger_window << '\n';
    out << "macd_fast = " << c.indicators.macd_fast << '\n';
    out << "macd_slow = " << c.indicators.macd_slow << '\n';
    out << "macd_signal = " << c.indicators.macd_signal << '\n';
    out << "rsi_window = " << c.indicators.rsi_window << '\n';
    out << "selection = [";
    for (std::size_t i = 0; i < c.features.size(); ++i) {
        out << (i ? ", " : "") << quote(c.features[i].to_string());
    }
    out << "]\n\n";
    out << "[walkforward]\n";
    out << "window_months = " << c.schedule.window_months << '\n';
    out << "retrain_months = " << c.schedule.retrain_months << '\n';
    out << "anchor_day = " << c.schedule.anchor_day << "\n\n";
    out << "[svm]\n";
    out << "c_grid = " << number_list(c.walkforward.c_grid) << '\n';
    if (c.walkforward.fixed_c) {
        out << "fixed_c = " << format_double(*c.walkforward.fixed_c) << '\n';
    }
    out << "validation_fraction = " << format_double(c.walkforward.validation_fraction) << '\n';
    out << "max_iterations = " << c.walkforward.solver.max_iterations << '\n';
    out << "tolerance = " << format_double(c.walkforward.solver.gradient_tolerance) << "\n\n";
    out << "[strategy]\n";
    out << "gamma = " << format_double(c.strategy.gamma) << '\n';
    out << "take_profit = " << format_double(c.strategy.take_profit) << '\n';
    out << "stop_loss = " << format_double(c.strategy.stop_loss) << '\n';
    out << "fee = " << format_double(c.strategy.fee) << '\n';
    out << "initial_cash = " << format_double(c.strategy.initial_cash) << "\n\n";
    out << "[report]\n";
    out << "gamma_grid = " << number_list(c.report.gamma_grid) << '\n';
    out << "volatility_window = " << c.report.volatility_window << '\n';
    out << "acf_lags = " << c.report.acf_lags << '\n';
    out << "proportion_months = " << c.report.proportion_months << '\n';
    out << "activity_period = " << quote(c.report.activity_period) << '\n';
    out << "plots = " << (c.report.plots ? "true" : "false") << "\n\n";
    out << "[sweep]\n";
    out << "gamma = " << number_list(c.sweep.gammas) << '\n';
    out << "c = " << number_list(c.sweep.cs) << "\n\n";
    out << "[output]\n";
    out << "dir = " << quote(c.output_dir) << "\n\n";
    out << "[run]\n";
    out << "jobs = " << c.jobs << '\n';
    out << "seed = " << c.seed << '\n';
    return out.str();
}

}  // namespace cwf
