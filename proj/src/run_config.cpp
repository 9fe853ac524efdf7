#include "wehrlflux/run_config.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "wehrlflux/errors.hpp"
#include "wehrlflux/kerr_model.hpp"
#include "wehrlflux/phase_space.hpp"

namespace wehrlflux {

namespace {

using nlohmann::json;

class Parser {
public:
    explicit Parser(const std::string& text) : text_(text) {}

    int line_of_offset(std::size_t offset) const {
        int line = 1;
        for (std::size_t k = 0; k < offset && k < text_.size(); ++k)
            if (text_[k] == '\n') ++line;
        return line;
    }

    // first line mentioning "key"; 0 when absent
    int line_of_key(const std::string& key) const {
        const auto pos = text_.find('"' + key + '"');
        return pos == std::string::npos ? 0 : line_of_offset(pos);
    }

    [[noreturn]] void fail(const std::string& key, const std::string& msg) const {
        throw ConfigError(msg, line_of_key(key));
    }

    void only_keys(const json& obj, const std::string& where, std::set<std::string> allowed) const {
        if (!obj.is_object()) fail(where, "'" + where + "' must be an object");
        for (auto it = obj.begin(); it != obj.end(); ++it) {
            if (!allowed.count(it.key())) fail(it.key(), "unknown key '" + it.key() + "' in " + where);
        }
    }

    double number(const json& obj, const std::string& key) const {
        const json& v = obj.at(key);
        if (!v.is_number()) fail(key, "'" + key + "' must be a number");
        const double x = v.get<double>();
        if (!std::isfinite(x)) fail(key, "'" + key + "' must be finite");
        return x;
    }

    double number_or(const json& obj, const std::string& key, double fallback) const {
        return obj.contains(key) ? number(obj, key) : fallback;
    }

    std::int64_t integer(const json& obj, const std::string& key) const {
        const json& v = obj.at(key);
        if (!v.is_number_integer()) fail(key, "'" + key + "' must be an integer");
        return v.get<std::int64_t>();
    }

    bool boolean(const json& obj, const std::string& key, bool fallback) const {
        if (!obj.contains(key)) return fallback;
        if (!obj.at(key).is_boolean()) fail(key, "'" + key + "' must be true or false");
        return obj.at(key).get<bool>();
    }

    std::vector<double> axis(const json& v, const std::string& key) const {
        std::vector<double> out;
        if (v.is_array()) {
            for (const auto& e : v) {
                if (!e.is_number() || !std::isfinite(e.get<double>()))
                    fail(key, "'" + key + "' entries must be finite numbers");
                out.push_back(e.get<double>());
            }
        } else if (v.is_object()) {
            only_keys(v, key, {"min", "max", "count"});
            for (const char* k : {"min", "max", "count"})
                if (!v.contains(k)) fail(key, "'" + key + "' range needs min, max and count");
            const double lo = number(v, "min"), hi = number(v, "max");
            const std::int64_t n = integer(v, "count");
            if (n < 1) fail(key, "'" + key + "' count must be positive");
            if (n == 1) {
                if (lo != hi) fail(key, "'" + key + "' range with count 1 needs min == max");
                out.push_back(lo);
            } else {
                if (!(hi > lo)) fail(key, "'" + key + "' range needs max > min");
                for (std::int64_t k = 0; k < n; ++k)
                    out.push_back(k == n - 1 ? hi : lo + (hi - lo) * static_cast<double>(k) / (n - 1));
            }
        } else {
            fail(key, "'" + key + "' must be a list or a {min, max, count} range");
        }
        if (out.empty()) fail(key, "'" + key + "' is empty");
        return out;
    }

private:
    const std::string& text_;
};

std::string resolve(const std::string& path, const std::string& base_dir) {
    std::filesystem::path p(path);
    if (p.is_absolute()) return p.string();
    return (std::filesystem::path(base_dir) / p).lexically_normal().string();
}

}  // namespace

const char* model_name(ModelKind m) {
    switch (m) {
        case ModelKind::kerr: return "kerr";
        case ModelKind::dicke: return "dicke";
        case ModelKind::cavity: return "cavity";
    }
    return "?";
}

std::string fnv1a_hex(const std::string& data) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string config_hash(const RunConfig& cfg) { return fnv1a_hex(cfg.canonical); }

RunConfig parse_config(const std::string& text, const std::string& base_dir) {
    Parser ps(text);
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("malformed JSON: ") + e.what(),
                          ps.line_of_offset(e.byte > 0 ? e.byte - 1 : 0));
    }
    ps.only_keys(j, "config", {"schema_version", "model", "params", "sweep", "numerics", "output"});

    RunConfig cfg;
    if (!j.contains("schema_version")) ps.fail("config", "missing 'schema_version'");
    cfg.schema_version = static_cast<int>(ps.integer(j, "schema_version"));
    if (cfg.schema_version != kConfigSchemaVersion) {
        ps.fail("schema_version", "unsupported schema_version " + std::to_string(cfg.schema_version) +
                                      " (expected " + std::to_string(kConfigSchemaVersion) + ")");
    }
    if (!j.contains("model") || !j["model"].is_string()) ps.fail("model", "'model' must be a string");
    const std::string model = j["model"].get<std::string>();
    if (model == "kerr") cfg.model = ModelKind::kerr;
    else if (model == "dicke") cfg.model = ModelKind::dicke;
    else if (model == "cavity") cfg.model = ModelKind::cavity;
    else ps.fail("model", "unknown model '" + model + "' (kerr, dicke or cavity)");

    if (!j.contains("output") || !j["output"].is_string() || j["output"].get<std::string>().empty())
        ps.fail("output", "'output' must be a non-empty path");
    cfg.output = resolve(j["output"].get<std::string>(), base_dir);

    const json params = j.value("params", json::object());
    const json sweep = j.value("sweep", json::object());
    const json numerics = j.value("numerics", json::object());
    ps.only_keys(numerics, "numerics",
                 {"n_max", "points_per_axis", "balance_tol", "certify_cutoff", "compute_gap",
                  "record_timing", "mc_samples", "seed"});

    try {
        switch (cfg.model) {
            case ModelKind::kerr: {
                ps.only_keys(params, "params", {"detuning", "nonlinearity", "kappa"});
                ps.only_keys(sweep, "sweep", {"N", "eps"});
                cfg.kerr.detuning = ps.number_or(params, "detuning", cfg.kerr.detuning);
                cfg.kerr.nonlinearity = ps.number_or(params, "nonlinearity", cfg.kerr.nonlinearity);
                cfg.kerr.kappa = ps.number_or(params, "kappa", cfg.kerr.kappa);
                if (!sweep.contains("eps")) ps.fail("sweep", "kerr sweep needs 'eps'");
                cfg.scan = ps.axis(sweep["eps"], "eps");
                break;
            }
            case ModelKind::cavity: {
                ps.only_keys(params, "params", {"drive", "kappa"});
                ps.only_keys(sweep, "sweep", {"drive"});
                cfg.kerr.detuning = 0.0;
                cfg.kerr.nonlinearity = 0.0;
                cfg.kerr.kappa = ps.number_or(params, "kappa", cfg.kerr.kappa);
                if (sweep.contains("drive")) cfg.scan = ps.axis(sweep["drive"], "drive");
                else if (params.contains("drive")) cfg.scan = {ps.number(params, "drive")};
                else ps.fail("params", "cavity model needs a 'drive'");
                break;
            }
            case ModelKind::dicke: {
                ps.only_keys(params, "params", {"omega0", "omega", "kappa", "gamma"});
                ps.only_keys(sweep, "sweep", {"N", "lambda", "lambda_over_lc"});
                cfg.dicke.omega0 = ps.number_or(params, "omega0", cfg.dicke.omega0);
                cfg.dicke.omega = ps.number_or(params, "omega", cfg.dicke.omega);
                cfg.dicke.kappa = ps.number_or(params, "kappa", cfg.dicke.kappa);
                cfg.dicke.gamma = ps.number_or(params, "gamma", cfg.dicke.gamma);
                cfg.dicke.validate();
                if (sweep.contains("lambda") == sweep.contains("lambda_over_lc"))
                    ps.fail("sweep", "dicke sweep needs exactly one of 'lambda' and 'lambda_over_lc'");
                if (sweep.contains("lambda")) {
                    cfg.scan = ps.axis(sweep["lambda"], "lambda");
                } else {
                    const double lc = critical_coupling(cfg.dicke);
                    for (double x : ps.axis(sweep["lambda_over_lc"], "lambda_over_lc"))
                        cfg.scan.push_back(x * lc);
                }
                for (double l : cfg.scan)
                    if (l < 0.0) ps.fail("lambda", "lambda values must be non-negative");
                break;
            }
        }
        if (cfg.model != ModelKind::cavity && sweep.contains("N")) {
            const json& n = sweep["N"];
            if (!n.is_array() || n.empty()) ps.fail("N", "'N' must be a non-empty list");
            cfg.N_list.clear();
            for (const auto& e : n) {
                if (!e.is_number_integer() || e.get<std::int64_t>() < 1 || e.get<std::int64_t>() > 100000)
                    ps.fail("N", "'N' entries must be positive integers");
                cfg.N_list.push_back(e.get<int>());
            }
        }
        if (cfg.model == ModelKind::kerr && !sweep.contains("N")) ps.fail("sweep", "kerr sweep needs 'N'");
        if (cfg.model != ModelKind::dicke) {
            for (double e : cfg.scan) {
                KerrParams p = cfg.kerr;
                p.eps = e;
                p.validate();
            }
        }
    } catch (const InvalidArgument& e) {
        throw ConfigError(std::string("invalid parameters: ") + e.what(), ps.line_of_key("params"));
    }

    if (cfg.model == ModelKind::kerr) {
        if (auto w = bistability_window(cfg.kerr)) {
            for (double e : cfg.scan) {
                if (e < 0.5 * w->lower() || e > 1.5 * w->upper()) {
                    char buf[160];
                    std::snprintf(buf, sizeof buf, "eps = %g outside the sweep range [%g, %g]", e,
                                  0.5 * w->lower(), 1.5 * w->upper());
                    ps.fail("eps", buf);
                }
            }
        }
    }

    if (numerics.contains("n_max")) {
        const auto v = ps.integer(numerics, "n_max");
        if (v < 2 || v > 100000) ps.fail("n_max", "'n_max' must be at least 2");
        cfg.n_max = static_cast<int>(v);
    }
    if (numerics.contains("points_per_axis")) {
        const auto v = ps.integer(numerics, "points_per_axis");
        if (v < kMinGridPoints || v > 4096)
            ps.fail("points_per_axis", "'points_per_axis' must lie in [" +
                                           std::to_string(kMinGridPoints) + ", 4096]");
        cfg.points_per_axis = static_cast<int>(v);
    }
    cfg.balance_tol = ps.number_or(numerics, "balance_tol", cfg.balance_tol);
    if (!(cfg.balance_tol > 0.0)) ps.fail("balance_tol", "'balance_tol' must be positive");
    cfg.certify_cutoff = ps.boolean(numerics, "certify_cutoff", cfg.certify_cutoff);
    cfg.compute_gap = ps.boolean(numerics, "compute_gap", cfg.compute_gap);
    cfg.record_timing = ps.boolean(numerics, "record_timing", cfg.record_timing);
    if (numerics.contains("mc_samples")) {
        cfg.mc_samples = ps.integer(numerics, "mc_samples");
        if (cfg.mc_samples < 0) ps.fail("mc_samples", "'mc_samples' must be non-negative");
        if (cfg.mc_samples == 1) ps.fail("mc_samples", "'mc_samples' must be 0 or at least 2");
    }
    if (numerics.contains("seed")) {
        const json& s = numerics["seed"];
        if (!s.is_number_unsigned()) ps.fail("seed", "'seed' must be a non-negative integer");
        cfg.seed = s.get<std::uint64_t>();
    }

    cfg.canonical = j.dump();
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read config " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    const std::string dir = std::filesystem::path(path).parent_path().string();
    return parse_config(ss.str(), dir.empty() ? "." : dir);
}

}  // namespace wehrlflux
