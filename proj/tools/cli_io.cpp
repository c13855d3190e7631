#include "cli_io.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "windtrade/errors.hpp"

namespace windtrade::cli {

namespace {

int digits(std::string_view s, std::size_t pos, std::size_t n) {
    if (pos + n > s.size()) throw DomainError("truncated timestamp");
    int v = 0;
    for (std::size_t i = pos; i < pos + n; ++i) {
        if (s[i] < '0' || s[i] > '9') throw DomainError("malformed timestamp '" + std::string(s) + "'");
        v = 10 * v + (s[i] - '0');
    }
    return v;
}

void expect(std::string_view s, std::size_t pos, char c) {
    if (pos >= s.size() || s[pos] != c) throw DomainError("malformed timestamp '" + std::string(s) + "'");
}

std::vector<std::string_view> split(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        out.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    for (auto& f : out) {
        while (!f.empty() && (f.front() == ' ' || f.front() == '\t')) f.remove_prefix(1);
        while (!f.empty() && (f.back() == ' ' || f.back() == '\t')) f.remove_suffix(1);
    }
    return out;
}

double parse_number(std::string_view s) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) {
        throw DomainError("not a finite number: '" + std::string(s) + "'");
    }
    return v;
}

// Calls row(fields, line_number) for every non-blank data line.
template <class Row>
void read_csv(const std::filesystem::path& file, std::string_view header, std::size_t columns, Row&& row) {
    std::ifstream in(file);
    const auto name = file.string();
    if (!in) throw ParseError(name, 0, "cannot open file");
    std::string line;
    std::size_t n = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++n;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!have_header) {
            if (line != header) throw ParseError(name, n, "expected header '" + std::string(header) + "'");
            have_header = true;
            continue;
        }
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        const auto fields = split(line);
        if (fields.size() != columns) {
            throw ParseError(name, n, "expected " + std::to_string(columns) + " fields, got " +
                                          std::to_string(fields.size()));
        }
        try {
            row(fields, n);
        } catch (const DomainError& e) {
            throw ParseError(name, n, e.what());
        }
    }
    if (!have_header) throw ParseError(name, 1, "empty file; expected header '" + std::string(header) + "'");
}

}  // namespace

double parse_timestamp(std::string_view s) {
    using namespace std::chrono;
    const int y = digits(s, 0, 4);
    expect(s, 4, '-');
    const int mo = digits(s, 5, 2);
    expect(s, 7, '-');
    const int d = digits(s, 8, 2);
    if (s.size() < 11 || (s[10] != 'T' && s[10] != ' ')) throw DomainError("malformed timestamp '" + std::string(s) + "'");
    const int hh = digits(s, 11, 2);
    expect(s, 13, ':');
    const int mm = digits(s, 14, 2);
    std::size_t pos = 16;
    double sec = 0.0;
    if (pos < s.size() && s[pos] == ':') {
        sec = digits(s, pos + 1, 2);
        pos += 3;
        if (pos < s.size() && s[pos] == '.') {
            std::size_t end = pos + 1;
            while (end < s.size() && s[end] >= '0' && s[end] <= '9') ++end;
            if (end == pos + 1) throw DomainError("malformed fractional seconds");
            sec += parse_number(std::string("0") + std::string(s.substr(pos, end - pos)));
            pos = end;
        }
    }
    double offset = 0.0;
    if (pos >= s.size()) throw DomainError("timestamp without time zone: '" + std::string(s) + "'");
    if (s[pos] == 'Z' && pos + 1 == s.size()) {
        offset = 0.0;
    } else if ((s[pos] == '+' || s[pos] == '-') && pos + 6 == s.size()) {
        const int oh = digits(s, pos + 1, 2);
        expect(s, pos + 3, ':');
        const int om = digits(s, pos + 4, 2);
        offset = (s[pos] == '+' ? 1.0 : -1.0) * (3600.0 * oh + 60.0 * om);
    } else {
        throw DomainError("malformed time zone in '" + std::string(s) + "'");
    }
    const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
    if (!ymd.ok() || hh > 23 || mm > 59 || sec >= 61.0) throw DomainError("invalid date or time '" + std::string(s) + "'");
    const double days = static_cast<double>(sys_days{ymd}.time_since_epoch().count());
    return days * 86400.0 + hh * 3600.0 + mm * 60.0 + sec - offset;
}

std::string format_timestamp(double seconds) {
    using namespace std::chrono;
    const auto whole = static_cast<long long>(std::floor(seconds));
    const long long day_count = whole >= 0 ? whole / 86400 : -((-whole + 86399) / 86400);
    const long long rem = whole - day_count * 86400;
    const year_month_day ymd{sys_days{days{day_count}}};
    char buf[96];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02lld:%02lld:%02lldZ", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()), rem / 3600, (rem / 60) % 60,
                  rem % 60);
    return buf;
}

std::vector<ProductionRecord> read_production_csv(const std::filesystem::path& file) {
    std::vector<ProductionRecord> out;
    read_csv(file, "timestamp,power", 2, [&](const auto& f, std::size_t) {
        out.push_back({parse_timestamp(f[0]), parse_number(f[1])});
    });
    return out;
}

std::vector<ForecastRecord> read_forecast_csv(const std::filesystem::path& file) {
    std::vector<ForecastRecord> out;
    read_csv(file, "issue_time,target_time,forecast", 3, [&](const auto& f, std::size_t) {
        const ForecastRecord r{parse_timestamp(f[0]), parse_timestamp(f[1]), parse_number(f[2])};
        if (!(r.target > r.issue)) throw DomainError("target_time must be after issue_time");
        out.push_back(r);
    });
    return out;
}

double normalize_power(double kw, double rated_kw, std::size_t& clamped) {
    const double v = kw / rated_kw;
    if (v < 0.0 || v > 1.0) ++clamped;
    return std::clamp(v, 0.0, 1.0);
}

std::vector<ForecastErrorPair> align_forecasts(const std::vector<ForecastRecord>& forecasts,
                                               const std::vector<ProductionRecord>& production, double rated_kw,
                                               double tolerance_s, std::size_t& dropped, std::size_t& clamped) {
    std::vector<ProductionRecord> prod = production;
    std::sort(prod.begin(), prod.end(), [](const auto& a, const auto& b) { return a.time < b.time; });
    std::vector<ForecastErrorPair> out;
    dropped = 0;
    for (const auto& f : forecasts) {
        const auto it = std::lower_bound(prod.begin(), prod.end(), f.target,
                                         [](const ProductionRecord& r, double t) { return r.time < t; });
        const ProductionRecord* best = nullptr;
        if (it != prod.end()) best = &*it;
        if (it != prod.begin()) {
            const auto& before = *std::prev(it);
            if (!best || f.target - before.time <= best->time - f.target) best = &before;
        }
        if (!best || std::abs(best->time - f.target) > tolerance_s) {
            ++dropped;
            continue;
        }
        out.push_back({normalize_power(f.forecast_kw, rated_kw, clamped),
                       normalize_power(best->power_kw, rated_kw, clamped), (f.target - f.issue) / 3600.0});
    }
    return out;
}

namespace {

using boost::property_tree::ptree;

const std::map<std::string, std::set<std::string>> kConfigKeys{
    {"plant", {"rated_power_kw", "delivery_hours", "nu_x", "x_min", "x_max"}},
    {"horizon", {"horizon_hours", "steps"}},
    {"forecast",
     {"model", "total_volatility", "sigma0_per_sqrt_hour", "eta_per_hour", "jump_b", "tau_star_hours", "table_file"}},
    {"market",
     {"mu_eur_per_mwh_per_hour", "mu_table_file", "penalty_p_eur_per_mwh2", "gamma_eur_h_per_mwh2"}},
    {"hjb", {"t_nodes", "phi_nodes", "y_nodes", "phi_max", "max_substeps"}},
    {"thresholds", {"updates", "x_nodes", "m_nodes", "hermite_nodes"}},
    {"simulation", {"n_paths", "seed"}},
};

class Reader {
public:
    Reader(const ptree& tree, std::string file) : tree_(tree), file_(std::move(file)) {}

    bool has(const std::string& key) const { return tree_.get_child_optional(key).has_value(); }

    double number(const std::string& key) const {
        const auto v = tree_.get_optional<std::string>(key);
        if (!v) throw ParseError(file_, 0, "missing key " + key);
        try {
            return parse_number(*v);
        } catch (const DomainError&) {
            throw ParseError(file_, 0, key + ": not a number ('" + *v + "')");
        }
    }
    double number(const std::string& key, double fallback) const { return has(key) ? number(key) : fallback; }

    std::size_t count(const std::string& key, std::size_t fallback) const {
        if (!has(key)) return fallback;
        const double v = number(key);
        if (v < 0.0 || v != std::floor(v) || v > 1e15) throw ParseError(file_, 0, key + ": expected a count");
        return static_cast<std::size_t>(v);
    }

    std::string text(const std::string& key, const std::string& fallback) const {
        return tree_.get<std::string>(key, fallback);
    }

private:
    const ptree& tree_;
    std::string file_;
};

// Two-column CSV with the given header, returned as parallel vectors.
std::pair<std::vector<double>, std::vector<double>> read_table(const std::filesystem::path& file,
                                                               std::string_view header) {
    std::vector<double> a;
    std::vector<double> b;
    read_csv(file, header, 2, [&](const auto& f, std::size_t) {
        a.push_back(parse_number(f[0]));
        b.push_back(parse_number(f[1]));
    });
    return {a, b};
}

ThetaSchedule schedule_from_config(const Reader& r, const LatentParams& lat, double T,
                                   const std::filesystem::path& base, const std::string& file) {
    const auto model = r.text("forecast.model", "constant_volatility");
    const double cap = lat.variance();
    if (model == "constant_volatility") {
        return ThetaSchedule::constant_volatility(r.number("forecast.total_volatility") / std::sqrt(T), T, cap);
    }
    if (model == "parametric") {
        return ThetaSchedule::parametric({r.number("forecast.sigma0_per_sqrt_hour"), r.number("forecast.eta_per_hour"),
                                          r.number("forecast.jump_b"), r.number("forecast.tau_star_hours")},
                                         T, cap);
    }
    if (model == "tabulated") {
        const auto [h, theta] = read_table(base / r.text("forecast.table_file", ""), "horizon_hours,theta");
        if (h.empty()) throw ParseError(file, 0, "forecast table is empty");
        // Knots at t = T - h. Before the longest horizon theta rises linearly
        // to the cap at t = 0; after the shortest it is held constant.
        std::vector<std::pair<double, double>> knots;
        for (std::size_t i = 0; i < h.size(); ++i) {
            if (h[i] > 0.0) knots.emplace_back(T - h[i], theta[i]);
        }
        if (knots.empty()) throw ParseError(file, 0, "forecast table has no positive horizon");
        std::sort(knots.begin(), knots.end());
        std::vector<double> times;
        std::vector<double> values;
        if (knots.front().first > 0.0) {
            times.push_back(0.0);
            values.push_back(cap);
        }
        for (const auto& [t, v] : knots) {
            times.push_back(t);
            values.push_back(std::min(v, cap));
        }
        times.push_back(T);
        values.push_back(values.back());
        return ThetaSchedule::tabulated(times, values, T, cap);
    }
    throw ParseError(file, 0, "forecast.model must be constant_volatility, parametric or tabulated");
}

}  // namespace

RunConfig load_config(const std::filesystem::path& file) {
    const auto name = file.string();
    ptree tree;
    try {
        boost::property_tree::read_ini(name, tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw ParseError(name, e.line(), e.message());
    }
    for (const auto& [section, body] : tree) {
        const auto known = kConfigKeys.find(section);
        if (known == kConfigKeys.end()) throw ParseError(name, 0, "unknown section [" + section + "]");
        if (!body.data().empty()) throw ParseError(name, 0, "key outside a section: " + section);
        for (const auto& [key, value] : body) {
            if (!known->second.count(key)) throw ParseError(name, 0, "unknown key " + section + "." + key);
        }
    }
    const Reader r(tree, name);
    const auto base = file.parent_path();

    try {
        const LatentParams lat(r.number("plant.nu_x"), r.number("plant.x_min"), r.number("plant.x_max"));
        const double rated_kw = r.number("plant.rated_power_kw");
        const double delivery_h = r.number("plant.delivery_hours", 1.0);
        if (!(rated_kw > 0.0) || !(delivery_h > 0.0)) throw DomainError("rated power and delivery hours must be positive");
        const double R = rated_kw * delivery_h / 1000.0;  // MWh per unit of normalized production
        const double T = r.number("horizon.horizon_hours");
        if (!(T > 0.0)) throw DomainError("horizon_hours must be positive");

        auto drift = [&] {
            if (r.has("market.mu_table_file")) {
                if (r.has("market.mu_eur_per_mwh_per_hour")) {
                    throw DomainError("give either mu_eur_per_mwh_per_hour or mu_table_file");
                }
                auto [t, mu] = read_table(base / r.text("market.mu_table_file", ""), "hours,mu_eur_per_mwh_per_hour");
                for (double& m : mu) m *= R;
                return DriftCurve::tabulated(t, mu);
            }
            return DriftCurve::constant(r.number("market.mu_eur_per_mwh_per_hour") * R, T);
        }();
        const double P = r.number("market.penalty_p_eur_per_mwh2");
        const double gamma = r.number("market.gamma_eur_h_per_mwh2") * R * R;

        HjbGrid hjb;
        hjb.t_nodes = r.count("hjb.t_nodes", hjb.t_nodes);
        hjb.phi_nodes = r.count("hjb.phi_nodes", hjb.phi_nodes);
        hjb.y_nodes = r.count("hjb.y_nodes", hjb.y_nodes);
        hjb.phi_max = r.number("hjb.phi_max", hjb.phi_max);
        hjb.max_substeps = r.count("hjb.max_substeps", hjb.max_substeps);

        ThresholdConfig th;
        th.x_nodes = r.count("thresholds.x_nodes", th.x_nodes);
        th.m_nodes = r.count("thresholds.m_nodes", th.m_nodes);
        th.hermite_nodes = r.count("thresholds.hermite_nodes", th.hermite_nodes);

        return RunConfig{lat,
                         R,
                         T,
                         r.count("horizon.steps", 240),
                         schedule_from_config(r, lat, T, base, name),
                         drift,
                         PenaltyFunction::quadratic(2.0 * P * R * R),
                         gamma,
                         hjb,
                         r.count("thresholds.updates", 8),
                         th,
                         r.count("simulation.n_paths", 10000),
                         static_cast<std::uint64_t>(r.count("simulation.seed", 1))};
    } catch (const DomainError& e) {
        throw ParseError(name, 0, e.what());
    }
}

ExperimentSpec make_spec(const RunConfig& cfg, Policy policy) {
    const std::size_t steps = policy == Policy::Thresholds ? cfg.updates : cfg.steps;
    ExperimentSpec spec{cfg.latent,  cfg.schedule, cfg.drift,   cfg.penalty,
                        cfg.gamma,   policy,       cfg.n_paths, cfg.seed,
                        uniform_grid(0.0, cfg.horizon, steps)};
    spec.thresholds = cfg.thresholds;
    spec.hjb = cfg.hjb;
    return spec;
}

void write_tensor(const std::filesystem::path& file, const std::vector<std::uint64_t>& dims,
                  const std::vector<double>& values) {
    static_assert(std::endian::native == std::endian::little, "tensor files are written in native little-endian");
    std::uint64_t total = 1;
    for (auto d : dims) total *= d;
    if (total != values.size()) throw DomainError("write_tensor: dims do not match the data");
    std::ofstream out(file, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + file.string());
    out.write("WTTENSOR", 8);
    const std::uint64_t rank = dims.size();
    out.write(reinterpret_cast<const char*>(&rank), sizeof rank);
    out.write(reinterpret_cast<const char*>(dims.data()), static_cast<std::streamsize>(dims.size() * 8));
    out.write(reinterpret_cast<const char*>(values.data()), static_cast<std::streamsize>(values.size() * 8));
    if (!out) throw std::runtime_error("cannot write " + file.string());
}

std::string fmt(double x) {
    char buf[32];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, ptr);
}

}  // namespace windtrade::cli
