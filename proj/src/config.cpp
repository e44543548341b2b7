#include "cascade/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <fmt/format.h>

namespace cascade {

namespace {

std::string_view trim(std::string_view s) {
    const auto* ws = " \t\r\n";
    auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        auto pos = s.find(sep, start);
        out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

double parse_double(std::string_view s) {
    s = trim(s);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty())
        throw std::invalid_argument(fmt::format("expected a number, got '{}'", s));
    return v;
}

std::size_t parse_count(std::string_view s) {
    s = trim(s);
    std::size_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty())
        throw std::invalid_argument(fmt::format("expected a non-negative integer, got '{}'", s));
    return v;
}

std::vector<double> parse_list(std::string_view s) {
    std::vector<double> out;
    if (trim(s).empty()) return out;
    for (auto item : split(s, ',')) out.push_back(parse_double(item));
    return out;
}

// "name(args)" -> args, or nullopt if `s` is not a call of `name`.
std::optional<std::string_view> call_args(std::string_view s, std::string_view name) {
    if (s.size() < name.size() + 2 || s.substr(0, name.size()) != name) return std::nullopt;
    auto rest = trim(s.substr(name.size()));
    if (rest.empty() || rest.front() != '(' || rest.back() != ')') return std::nullopt;
    return rest.substr(1, rest.size() - 2);
}

using Setter = std::function<void(ScenarioConfig&, std::string_view)>;

const std::map<std::string, Setter, std::less<>>& setters() {
    static const std::map<std::string, Setter, std::less<>> table = {
        {"e2", [](ScenarioConfig& c, std::string_view v) { c.e2 = parse_double(v); }},
        {"center1", [](ScenarioConfig& c, std::string_view v) { c.center1 = parse_double(v); }},
        {"halfwidth1", [](ScenarioConfig& c, std::string_view v) { c.halfwidth1 = parse_double(v); }},
        {"count1", [](ScenarioConfig& c, std::string_view v) { c.count1 = parse_count(v); }},
        {"center0", [](ScenarioConfig& c, std::string_view v) { c.center0 = parse_double(v); }},
        {"halfwidth0", [](ScenarioConfig& c, std::string_view v) { c.halfwidth0 = parse_double(v); }},
        {"count0", [](ScenarioConfig& c, std::string_view v) { c.count0 = parse_count(v); }},
        {"rho1", [](ScenarioConfig& c, std::string_view v) { c.rho1 = parse_profile(v); }},
        {"rho0", [](ScenarioConfig& c, std::string_view v) { c.rho0 = parse_profile(v); }},
        {"v12", [](ScenarioConfig& c, std::string_view v) { c.v12 = parse_profile(v); }},
        {"v10", [](ScenarioConfig& c, std::string_view v) { c.v10 = parse_profile(v); }},
        {"edge_taper", [](ScenarioConfig& c, std::string_view v) { c.edge_taper = parse_double(v); }},
        {"t_max", [](ScenarioConfig& c, std::string_view v) { c.t_max = parse_double(v); }},
        {"dt", [](ScenarioConfig& c, std::string_view v) { c.dt = parse_double(v); }},
        {"sample_every", [](ScenarioConfig& c, std::string_view v) { c.sample_every = parse_count(v); }},
        {"fit_t_lo", [](ScenarioConfig& c, std::string_view v) { c.fit_t_lo = parse_double(v); }},
        {"fit_t_hi", [](ScenarioConfig& c, std::string_view v) { c.fit_t_hi = parse_double(v); }},
        {"norm_tolerance", [](ScenarioConfig& c, std::string_view v) { c.norm_tolerance = parse_double(v); }},
        {"output", [](ScenarioConfig& c, std::string_view v) {
             if (v.empty()) throw std::invalid_argument("output prefix must not be empty");
             c.output = std::string(v);
         }},
        {"workers", [](ScenarioConfig& c, std::string_view v) {
             c.workers = parse_count(v);
             if (c.workers == 0) throw std::invalid_argument("workers must be at least 1");
         }},
        {"peak_widths", [](ScenarioConfig& c, std::string_view v) { c.peak_widths = parse_list(v); }},
    };
    return table;
}

// Returns the key that was set.
std::string assign(ScenarioConfig& cfg, std::string_view line, const std::string& source, std::size_t lineno) {
    auto eq = line.find('=');
    if (eq == std::string_view::npos)
        throw ConfigError(source, lineno, fmt::format("expected 'key = value', got '{}'", line));
    auto key = trim(line.substr(0, eq));
    auto value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError(source, lineno, "missing key before '='");
    auto it = setters().find(key);
    if (it == setters().end()) throw ConfigError(source, lineno, fmt::format("unknown key {}", key));
    try {
        it->second(cfg, value);
    } catch (const std::exception& e) {
        throw ConfigError(source, lineno, fmt::format("bad value for {}: {}", key, e.what()));
    }
    return std::string(key);
}

}  // namespace

ConfigError::ConfigError(std::string source, std::size_t line, const std::string& message)
    : std::runtime_error(line > 0 ? fmt::format("{}:{}: {}", source, line, message)
                                  : fmt::format("{}: {}", source, message)),
      line_(line),
      message_(message) {}

std::string format_number(double x) { return fmt::format("{:.17g}", x); }

CouplingProfile parse_profile(std::string_view text) {
    text = trim(text);
    if (auto args = call_args(text, "flat")) return CouplingProfile::flat(parse_double(*args));
    if (auto args = call_args(text, "lorentzian")) {
        auto parts = split(*args, ',');
        if (parts.size() != 3)
            throw std::invalid_argument("lorentzian(center, width, peak) takes 3 arguments");
        return CouplingProfile::lorentzian(parse_double(parts[0]), parse_double(parts[1]),
                                           parse_double(parts[2]));
    }
    if (auto args = call_args(text, "table")) {
        TabulatedProfile t;
        for (auto item : split(*args, ',')) {
            auto colon = item.find(':');
            if (colon == std::string_view::npos)
                throw std::invalid_argument(fmt::format("table entry '{}' is not energy:value", item));
            t.knots.emplace_back(parse_double(item.substr(0, colon)), parse_double(item.substr(colon + 1)));
        }
        return CouplingProfile(std::move(t));
    }
    return CouplingProfile::flat(parse_double(text));
}

std::string format_profile(const CouplingProfile& profile) {
    const auto& v = profile.variant();
    if (const auto* f = std::get_if<FlatProfile>(&v)) return fmt::format("flat({})", format_number(f->value));
    if (const auto* l = std::get_if<LorentzianProfile>(&v))
        return fmt::format("lorentzian({}, {}, {})", format_number(l->center), format_number(l->width),
                           format_number(l->peak));
    const auto& t = std::get<TabulatedProfile>(v);
    std::string out = "table(";
    for (std::size_t i = 0; i < t.knots.size(); ++i) {
        if (i) out += ", ";
        out += format_number(t.knots[i].first) + ":" + format_number(t.knots[i].second);
    }
    return out + ")";
}

ScenarioConfig parse_config(std::string_view text, const std::string& source) {
    ScenarioConfig cfg;
    bool center1_set = false, center0_set = false;
    std::size_t lineno = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
        auto end = text.find('\n', start);
        auto raw = text.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start);
        ++lineno;
        auto hash = raw.find('#');
        auto line = trim(hash == std::string_view::npos ? raw : raw.substr(0, hash));
        if (!line.empty()) {
            auto key = assign(cfg, line, source, lineno);
            center1_set |= key == "center1";
            center0_set |= key == "center0";
        }
        if (end == std::string_view::npos) break;
        start = end + 1;
    }
    if (!center1_set) cfg.center1 = cfg.e2;
    if (!center0_set) cfg.center0 = cfg.e2;
    return cfg;
}

ScenarioConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path, 0, "cannot open config file");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), path);
}

void apply_assignment(ScenarioConfig& cfg, std::string_view assignment, const std::string& source) {
    assign(cfg, trim(assignment), source, 0);
}

std::string to_text(const ScenarioConfig& c) {
    std::string out;
    auto line = [&](std::string_view key, const std::string& value) {
        out += fmt::format("{} = {}\n", key, value);
    };
    line("e2", format_number(c.e2));
    line("center1", format_number(c.center1));
    line("halfwidth1", format_number(c.halfwidth1));
    line("count1", std::to_string(c.count1));
    line("center0", format_number(c.center0));
    line("halfwidth0", format_number(c.halfwidth0));
    line("count0", std::to_string(c.count0));
    line("rho1", format_profile(c.rho1));
    line("rho0", format_profile(c.rho0));
    line("v12", format_profile(c.v12));
    line("v10", format_profile(c.v10));
    line("edge_taper", format_number(c.edge_taper));
    line("t_max", format_number(c.t_max));
    line("dt", format_number(c.dt));
    line("sample_every", std::to_string(c.sample_every));
    if (c.fit_t_lo) line("fit_t_lo", format_number(*c.fit_t_lo));
    if (c.fit_t_hi) line("fit_t_hi", format_number(*c.fit_t_hi));
    line("norm_tolerance", format_number(c.norm_tolerance));
    line("output", c.output);
    line("workers", std::to_string(c.workers));
    if (!c.peak_widths.empty()) {
        std::string list;
        for (std::size_t i = 0; i < c.peak_widths.size(); ++i)
            list += (i ? ", " : "") + format_number(c.peak_widths[i]);
        line("peak_widths", list);
    }
    return out;
}

CascadeSpec ScenarioConfig::spec() const {
    return CascadeSpec(e2, EnergyGrid(center1, halfwidth1, count1), EnergyGrid(center0, halfwidth0, count0),
                       rho1, rho0, v12, v10);
}

RunControls ScenarioConfig::controls() const {
    RunControls rc;
    rc.dt = dt;
    rc.t_max = t_max;
    rc.sample_every = sample_every;
    rc.norm_tolerance = norm_tolerance;
    rc.discretize.edge_taper = edge_taper;
    if (fit_t_lo || fit_t_hi) {
        if (!(fit_t_lo && fit_t_hi))
            throw ConfigError("config", 0, "fit_t_lo and fit_t_hi must be given together");
        rc.window = FitWindow{*fit_t_lo, *fit_t_hi};
    }
    return rc;
}

}  // namespace cascade
