#pragma once

// Flat key = value experiment configs. Lines are `key = value` with `#`
// comments; sweep axes (n, m, t, alpha, a) take comma-separated lists and
// expand as a cross product in fixed order. Unknown keys are rejected.

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "mdclt/array_spec.hpp"
#include "mdclt/distances.hpp"
#include "mdclt/errors.hpp"

namespace mdclt {

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> parts;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            parts.push_back(trim(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    parts.push_back(trim(cur));
    return parts;
}

} // namespace detail

class FlatConfig {
public:
    static FlatConfig from_string(const std::string& text) {
        FlatConfig cfg;
        std::istringstream in(text);
        std::string line;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            const auto hash = line.find('#');
            if (hash != std::string::npos) line = line.substr(0, hash);
            line = detail::trim(line);
            if (line.empty()) continue;
            const auto eq = line.find('=');
            if (eq == std::string::npos)
                throw config_error("config line " + std::to_string(lineno) + ": expected key = value");
            const std::string key = detail::trim(line.substr(0, eq));
            const std::string value = detail::trim(line.substr(eq + 1));
            if (key.empty()) throw config_error("config line " + std::to_string(lineno) + ": empty key");
            if (cfg.values_.count(key))
                throw config_error("config: duplicate key '" + key + "'");
            cfg.values_[key] = value;
        }
        return cfg;
    }

    static FlatConfig from_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw config_error("config: cannot open '" + path + "'");
        std::ostringstream ss;
        ss << in.rdbuf();
        return from_string(ss.str());
    }

    bool has(const std::string& key) const { return values_.count(key) != 0; }

    void set(const std::string& key, const std::string& value) { values_[key] = value; }

    std::string get_string(const std::string& key, const std::string& fallback = "") {
        consumed_.insert(key);
        auto it = values_.find(key);
        return it == values_.end() ? fallback : it->second;
    }

    std::int64_t get_int(const std::string& key, std::int64_t fallback) {
        const std::string raw = get_string(key);
        if (raw.empty()) return fallback;
        try {
            std::size_t pos = 0;
            const std::int64_t v = std::stoll(raw, &pos);
            if (pos != raw.size()) throw std::invalid_argument(raw);
            return v;
        } catch (const std::exception&) {
            throw config_error("config: key '" + key + "' is not an integer: '" + raw + "'");
        }
    }

    std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) {
        const std::string raw = get_string(key);
        if (raw.empty()) return fallback;
        try {
            std::size_t pos = 0;
            const std::uint64_t v = std::stoull(raw, &pos);
            if (pos != raw.size()) throw std::invalid_argument(raw);
            return v;
        } catch (const std::exception&) {
            throw config_error("config: key '" + key + "' is not an unsigned integer: '" + raw + "'");
        }
    }

    double get_double(const std::string& key, double fallback) {
        const std::string raw = get_string(key);
        if (raw.empty()) return fallback;
        try {
            std::size_t pos = 0;
            const double v = std::stod(raw, &pos);
            if (pos != raw.size()) throw std::invalid_argument(raw);
            return v;
        } catch (const std::exception&) {
            throw config_error("config: key '" + key + "' is not a number: '" + raw + "'");
        }
    }

    template <class T, class Parse>
    std::vector<T> get_list(const std::string& key, const Parse& parse) {
        const std::string raw = get_string(key);
        std::vector<T> out;
        if (raw.empty()) return out;
        for (const auto& part : detail::split(raw, ',')) {
            if (part.empty()) throw config_error("config: key '" + key + "' has an empty list entry");
            out.push_back(parse(part));
        }
        return out;
    }

    std::vector<std::int64_t> get_int_list(const std::string& key) {
        return get_list<std::int64_t>(key, [&](const std::string& s) {
            try {
                return static_cast<std::int64_t>(std::stoll(s));
            } catch (const std::exception&) {
                throw config_error("config: key '" + key + "' has a non-integer entry '" + s + "'");
            }
        });
    }

    std::vector<double> get_double_list(const std::string& key) {
        return get_list<double>(key, [&](const std::string& s) {
            try {
                return std::stod(s);
            } catch (const std::exception&) {
                throw config_error("config: key '" + key + "' has a non-numeric entry '" + s + "'");
            }
        });
    }

    void reject_unknown() const {
        for (const auto& [key, value] : values_)
            if (!consumed_.count(key))
                throw config_error("config: unknown key '" + key + "'");
    }

    // sorted key=value lines; input to the manifest hash
    std::string canonical() const {
        std::string out;
        for (const auto& [key, value] : values_) {
            out += key;
            out += '=';
            out += value;
            out += '\n';
        }
        return out;
    }

private:
    std::map<std::string, std::string> values_;
    std::set<std::string> consumed_;
};

struct CGridSpec {
    double c_min = 1e-4;
    double c_max = 10.0;
    int points = 200;
};

inline CGridSpec parse_c_grid(const std::string& raw) {
    const auto parts = detail::split(raw, ':');
    if (parts.size() != 3) throw config_error("c_grid must be 'min:max:points'");
    CGridSpec g;
    try {
        g.c_min = std::stod(parts[0]);
        g.c_max = std::stod(parts[1]);
        g.points = std::stoi(parts[2]);
    } catch (const std::exception&) {
        throw config_error("c_grid must be 'min:max:points' with numeric entries");
    }
    if (!(g.c_min > 0.0) || !(g.c_max > g.c_min) || g.points < 1)
        throw config_error("c_grid: need 0 < min < max and points >= 1");
    return g;
}

inline MarginalModel parse_innovation(const std::string& name) {
    if (name == "rademacher" || name.empty()) return MarginalModel::rademacher();
    if (name == "normal") return MarginalModel::standard_normal();
    if (name == "heavy_tail") return MarginalModel::heavy_tail();
    if (name.rfind("uniform_union:", 0) == 0) {
        try {
            return MarginalModel::uniform_union(std::stod(name.substr(14)));
        } catch (const invalid_spec_error&) {
            throw;
        } catch (const std::exception&) {
            throw config_error("innovation: bad uniform_union parameter in '" + name + "'");
        }
    }
    throw config_error("innovation: unknown marginal '" + name + "'");
}

struct ExperimentConfig {
    std::string family;
    std::vector<std::int64_t> n_list;
    std::vector<std::int64_t> m_list;
    std::vector<std::int64_t> t_list;
    std::vector<double> alpha_list;
    std::vector<double> a_list;
    std::vector<double> weights;
    std::string innovation = "rademacher";
    std::int64_t replicates = 0;  // 0 = per-command default
    std::uint64_t seed = 1;
    int resamples = 200;
    int bins = 64;
    std::optional<CGridSpec> c_grid;
    std::vector<Metric> metrics = {Metric::W, Metric::K};
    std::string out_dir;
    std::int64_t chains = 50;
    std::string canonical;
};

inline ExperimentConfig load_experiment_config(FlatConfig& cfg) {
    ExperimentConfig ec;
    ec.family = cfg.get_string("family");
    ec.n_list = cfg.get_int_list("n");
    ec.m_list = cfg.get_int_list("m");
    ec.t_list = cfg.get_int_list("t");
    ec.alpha_list = cfg.get_double_list("alpha");
    ec.a_list = cfg.get_double_list("a");
    {
        const std::string w = cfg.get_string("weights");
        if (!w.empty()) {
            std::istringstream in(w);
            double v;
            while (in >> v) ec.weights.push_back(v);
            if (!in.eof()) throw config_error("weights: expected space-separated numbers");
        }
    }
    ec.innovation = cfg.get_string("innovation", "rademacher");
    ec.replicates = cfg.get_int("replicates", ec.replicates);
    if (cfg.has("replicates") && ec.replicates < 1)
        throw config_error("replicates must be >= 1");
    ec.seed = cfg.get_u64("seed", ec.seed);
    ec.resamples = static_cast<int>(cfg.get_int("resamples", ec.resamples));
    ec.bins = static_cast<int>(cfg.get_int("bins", ec.bins));
    const std::string grid = cfg.get_string("c_grid");
    if (!grid.empty()) ec.c_grid = parse_c_grid(grid);
    {
        const std::string metrics = cfg.get_string("metrics");
        if (!metrics.empty()) {
            ec.metrics.clear();
            for (const auto& m : detail::split(metrics, ',')) {
                if (m == "W") ec.metrics.push_back(Metric::W);
                else if (m == "K") ec.metrics.push_back(Metric::K);
                else if (m == "TV") ec.metrics.push_back(Metric::TV);
                else throw config_error("metrics: unknown metric '" + m + "'");
            }
            if (ec.metrics.empty()) throw config_error("metrics: empty list");
        }
    }
    ec.out_dir = cfg.get_string("out");
    ec.chains = cfg.get_int("chains", ec.chains);
    cfg.reject_unknown();
    ec.canonical = cfg.canonical();
    return ec;
}

// Cross-product expansion in fixed axis order (n, m, t, alpha, a).
inline std::vector<ArraySpec> expand_specs(const ExperimentConfig& ec) {
    std::vector<ArraySpec> specs;
    if (ec.family == "moving_window") {
        if (ec.n_list.empty()) throw config_error("moving_window: key 'n' is required");
        if (ec.weights.empty()) throw config_error("moving_window: key 'weights' is required");
        const MarginalModel innovation = parse_innovation(ec.innovation);
        for (auto n : ec.n_list)
            specs.push_back(moving_window_spec(n, static_cast<int>(ec.weights.size()) - 1,
                                               innovation, ec.weights));
    } else if (ec.family == "heavy_tail") {
        if (ec.m_list.empty()) throw config_error("heavy_tail: key 'm' is required");
        if (ec.t_list.empty() && ec.m_list.empty())
            throw config_error("heavy_tail: key 't' is required");
        for (auto m : ec.m_list) {
            if (ec.t_list.empty()) {
                specs.push_back(heavy_tail_example_spec(static_cast<int>(m),
                                                        static_cast<int>(m * m)));
            } else {
                for (auto t : ec.t_list)
                    specs.push_back(heavy_tail_example_spec(static_cast<int>(m), static_cast<int>(t)));
            }
        }
    } else if (ec.family == "two_scale") {
        if (ec.n_list.empty()) throw config_error("two_scale: key 'n' is required");
        if (ec.alpha_list.empty()) throw config_error("two_scale: key 'alpha' is required");
        if (ec.a_list.empty()) throw config_error("two_scale: key 'a' is required");
        for (auto n : ec.n_list)
            for (double alpha : ec.alpha_list)
                for (double a : ec.a_list) specs.push_back(two_scale_example_spec(n, alpha, a));
    } else if (ec.family.empty()) {
        throw config_error("key 'family' is required");
    } else {
        throw config_error("unknown family '" + ec.family + "'");
    }
    if (specs.empty()) throw config_error("config expands to an empty sweep");
    return specs;
}

// FNV-1a, printed as 16 hex digits; enough to fingerprint a config.
inline std::string config_hash(const std::string& canonical) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : canonical) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

} // namespace mdclt
