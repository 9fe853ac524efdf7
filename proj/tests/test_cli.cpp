#include "doctest.h"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <unistd.h>

#include "wehrlflux/commands.hpp"
#include "wehrlflux/errors.hpp"

using namespace wehrlflux;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("wehrlflux_test_" + std::to_string(getpid()));
    fs::create_directories(dir);
    return dir / name;
}

void write_file(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int config_error_line(const std::string& text) {
    try {
        parse_config(text);
    } catch (const ConfigError& e) {
        return e.line();
    }
    return -1;
}

const char* kKerr = R"({
  "schema_version": 1,
  "model": "kerr",
  "params": {"detuning": -2, "nonlinearity": 1, "kappa": 0.5},
  "sweep": {"N": [3, 4], "eps": {"min": 0.6, "max": 1.0, "count": 5}},
  "numerics": {"points_per_axis": 96, "seed": 9},
  "output": "k.csv"
})";

}  // namespace

TEST_CASE("config parsing") {
    const RunConfig c = parse_config(kKerr, "/data");
    CHECK(c.model == ModelKind::kerr);
    CHECK(c.kerr.kappa == 0.5);
    CHECK(c.N_list == std::vector<int>{3, 4});
    REQUIRE(c.scan.size() == 5);
    CHECK(c.scan.front() == 0.6);
    CHECK(c.scan.back() == 1.0);
    CHECK(c.scan[2] == doctest::Approx(0.8));
    CHECK(c.points_per_axis == 96);
    CHECK(c.seed == 9);
    CHECK(c.output == "/data/k.csv");

    SUBCASE("hash ignores layout but not content") {
        std::string compact = kKerr;
        compact.erase(std::remove(compact.begin(), compact.end(), '\n'), compact.end());
        CHECK(config_hash(parse_config(compact, "/data")) == config_hash(c));
        std::string other = kKerr;
        other.replace(other.find("\"count\": 5"), 10, "\"count\": 6");
        CHECK(config_hash(parse_config(other, "/data")) != config_hash(c));
        CHECK(config_hash(c).size() == 16);
    }
    SUBCASE("dicke axis relative to lambda_c") {
        const RunConfig d = parse_config(R"({"schema_version": 1, "model": "dicke",
            "params": {"omega0": 0.005, "omega": 0.01, "kappa": 1, "gamma": 0.001},
            "sweep": {"lambda_over_lc": [0.5, 2]}, "output": "d.csv"})");
        REQUIRE(d.scan.size() == 2);
        CHECK(d.scan[1] == doctest::Approx(2.0 * critical_coupling(d.dicke)));
        CHECK(d.N_list == std::vector<int>{1});
    }
    SUBCASE("cavity") {
        const RunConfig v = parse_config(
            R"({"schema_version": 1, "model": "cavity", "params": {"drive": 2, "kappa": 1}, "output": "c.csv"})");
        CHECK(v.scan == std::vector<double>{2.0});
        CHECK(v.kerr.nonlinearity == 0.0);
        CHECK(v.kerr.detuning == 0.0);
    }
}

TEST_CASE("config errors carry line numbers") {
    CHECK(config_error_line("{\n \"schema_version\": 1,\n \"model\": \"kerr\",\n \"bogus\": 2,\n \"output\": \"x\"}") == 4);
    CHECK(config_error_line("{\n \"schema_version\": 1,\n \"model\": \"kerr\"\n \"output\": \"x\"}") == 4);
    CHECK(config_error_line("{\"schema_version\": 2, \"model\": \"kerr\", \"output\": \"x\"}") == 1);
    CHECK(config_error_line(R"({"schema_version": 1, "model": "spin", "output": "x"})") == 1);
    // out of the sweep range around the bistable window
    std::string wide = kKerr;
    wide.replace(wide.find("\"max\": 1.0"), 10, "\"max\": 2.5");
    CHECK(config_error_line(wide) == 5);
    std::string neg = kKerr;
    neg.replace(neg.find("\"kappa\": 0.5"), 12, "\"kappa\": -1");
    CHECK(config_error_line(neg) == 4);
    std::string small_grid = kKerr;
    small_grid.replace(small_grid.find("96"), 2, "16");
    CHECK(config_error_line(small_grid) == 6);
    CHECK(config_error_line(R"({"schema_version": 1, "model": "dicke", "sweep": {"lambda": [0.1], "lambda_over_lc": [1]}, "output": "x"})") == 1);
}

TEST_CASE("CSV rows round-trip bit for bit") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<ResultRow> rows;
    for (int k = 0; k < 50; ++k) {
        ResultRow r;
        r.model = "kerr";
        r.N = k;
        double* f[] = {&r.param, &r.S, &r.Phi_ext, &r.Phi_q, &r.Pi_ext, &r.Pi_u, &r.Pi_d, &r.gap,
                       &r.alpha_re, &r.alpha_im, &r.residual};
        for (double* x : f) *x = u(rng) * std::pow(10.0, 40.0 * u(rng));
        r.n_max_used = 7 * k;
        rows.push_back(r);
    }
    rows[0].param = 5e-324;
    const fs::path p = scratch("roundtrip.csv");
    write_results(p.string(), {{"model", "kerr"}, {"note", "a: b"}}, "kerr", rows);
    CHECK_FALSE(fs::exists(p.string() + ".tmp"));
    const ResultTable t = read_results(p.string());
    CHECK(t.get("note") == "a: b");
    REQUIRE(t.rows.size() == rows.size());
    for (std::size_t k = 0; k < rows.size(); ++k) {
        CHECK(format_row(t.rows[k]) == format_row(rows[k]));
        CHECK(t.rows[k].Pi_d == rows[k].Pi_d);
        CHECK(std::isnan(t.rows[k].beta));
    }
    CHECK(csv_header("dicke") ==
          "model,N,lambda,S,Phi_ext,Phi_q,Pi_ext,Pi_u,Pi_d,gap,alpha_re,alpha_im,beta,residual,"
          "n_max_used,wall_time_s");
    CHECK_THROWS_AS(parse_row("kerr,1,2", "kerr"), IoError);
    CHECK_THROWS_AS(read_results(scratch("missing.csv").string()), IoError);
}

TEST_CASE("threads from the environment") {
    CHECK(resolve_threads(3) == 3);
    setenv("WEHRLFLUX_THREADS", "5", 1);
    CHECK(resolve_threads(0) == 5);
    setenv("WEHRLFLUX_THREADS", "zero", 1);
    CHECK(resolve_threads(0) == 1);
    unsetenv("WEHRLFLUX_THREADS");
    CHECK(resolve_threads(0) == 1);
}

TEST_CASE("exit codes") {
    CHECK(exit_code_for(ConfigError("x", 1)) == kExitConfig);
    CHECK(exit_code_for(IoError("x")) == kExitIo);
    CHECK(exit_code_for(ConvergenceError("x")) == kExitNumerical);
    CHECK(exit_code_for(TruncationInadequate("x", 3)) == kExitNumerical);
}

TEST_CASE("run: empty cavity") {
    const fs::path cfg = scratch("cavity.json");
    write_file(cfg, R"({"schema_version": 1, "model": "cavity", "params": {"drive": 1, "kappa": 0.5},
                        "output": "cavity.csv"})");
    std::ostringstream out, err;
    REQUIRE(run_command(cfg.string(), {}, out, err) == kExitOk);
    const ResultTable t = read_results(scratch("cavity.csv").string());
    REQUIRE(t.rows.size() == 1);
    const ResultRow& r = t.rows[0];
    CHECK(std::abs(r.Pi_ext + r.Pi_u + r.Pi_d - 4.0) < 4e-4);
    CHECK(r.Pi_ext == doctest::Approx(4.0).epsilon(1e-6));
    CHECK(t.get("config_hash").rfind("fnv1a64:", 0) == 0);
    CHECK_FALSE(fs::exists(scratch("cavity.csv.journal")));
}

TEST_CASE("run: failures and exit codes") {
    std::ostringstream out, err;
    const fs::path bad = scratch("bad.json");
    write_file(bad, "{\n  \"schema_version\": 1,\n  \"model\": \"kerr\",\n  \"nope\": 1\n}");
    CHECK(run_command(bad.string(), {}, out, err) == kExitConfig);
    CHECK(err.str().find("bad.json:4:") != std::string::npos);

    CHECK(run_command(scratch("absent.json").string(), {}, out, err) == kExitIo);

    const fs::path blocker = scratch("blocker");
    write_file(blocker, "x");
    const fs::path unwritable = scratch("unwritable.json");
    write_file(unwritable, R"({"schema_version": 1, "model": "cavity", "params": {"drive": 1},
                              "output": "blocker/out.csv"})");
    CHECK(run_command(unwritable.string(), {}, out, err) == kExitIo);

    // an explicit cutoff below the rule fails every point
    const fs::path trunc = scratch("trunc.json");
    write_file(trunc, R"({"schema_version": 1, "model": "kerr", "sweep": {"N": [3], "eps": [0.6, 0.7]},
                         "numerics": {"n_max": 5}, "output": "trunc.csv"})");
    std::ostringstream e2;
    CHECK(run_command(trunc.string(), {}, out, e2) == kExitNumerical);
    CHECK(e2.str().find("failed: N=3 eps=0.6") != std::string::npos);
    RunOptions keep;
    keep.keep_going = true;
    CHECK(run_command(trunc.string(), keep, out, e2) == kExitOk);
    CHECK(read_results(scratch("trunc.csv").string()).rows.empty());
}

TEST_CASE("identical configs give identical files for any thread count") {
    const fs::path cfg = scratch("det.json");
    write_file(cfg, R"({"schema_version": 1, "model": "kerr",
        "sweep": {"N": [3, 4], "eps": [0.6, 0.9, 1.2]},
        "numerics": {"points_per_axis": 64}, "output": "det.csv"})");
    std::ostringstream out, err;
    RunOptions one;
    one.threads = 1;
    REQUIRE(run_command(cfg.string(), one, out, err) == kExitOk);
    const std::string first = read_file(scratch("det.csv"));
    RunOptions three;
    three.threads = 3;
    REQUIRE(run_command(cfg.string(), three, out, err) == kExitOk);
    CHECK(read_file(scratch("det.csv")) == first);
    CHECK(read_results(scratch("det.csv").string()).rows.size() == 6);
}

TEST_CASE("collapse command") {
    const double eps_c = 0.93;
    std::vector<ResultRow> rows;
    for (int N : {10, 20}) {
        for (int k = -10; k <= 10; ++k) {
            const double x = 0.5 * k;
            ResultRow r;
            r.model = "kerr";
            r.N = N;
            r.param = eps_c * (1.0 + x / N);
            r.Pi_u = std::exp(-x * x / 4.0);
            r.Pi_d = N / (1.0 + x * x);
            rows.push_back(r);
        }
    }
    const fs::path p = scratch("collapse.csv");
    write_results(p.string(), {{"model", "kerr"}}, "kerr", rows);
    std::ostringstream out, err;
    auto metric = [](const std::string& text) {
        const auto pos = text.find("# metric N=10..20: ");
        REQUIRE(pos != std::string::npos);
        return std::strtod(text.c_str() + pos + 19, nullptr);
    };
    REQUIRE(collapse_command(p.string(), eps_c, out, err) == kExitOk);
    CHECK(metric(out.str()) < 1e-12);
    std::ostringstream out2;
    collapse_command(p.string(), 1.05 * eps_c, out2, err);
    CHECK(metric(out2.str()) > 0.05);

    rows.resize(21);
    write_results(p.string(), {{"model", "kerr"}}, "kerr", rows);
    std::ostringstream out3;
    REQUIRE(collapse_command(p.string(), eps_c, out3, err) == kExitOk);
    CHECK(out3.str().find("undefined") != std::string::npos);

    write_results(p.string(), {{"model", "dicke"}}, "dicke", {});
    CHECK(collapse_command(p.string(), eps_c, out3, err) == kExitConfig);
}

TEST_CASE("fit-divergence command on exact rows") {
    const double lc = 0.35;
    std::vector<ResultRow> rows;
    for (int k = 1; k <= 40; ++k) {
        for (int s : {-1, 1}) {
            ResultRow r;
            r.model = "dicke";
            r.param = lc * (1.0 + s * 0.0025 * k);
            r.Pi_d = 3.0 / std::abs(lc - r.param);
            rows.push_back(r);
        }
    }
    const fs::path p = scratch("div.csv");
    write_results(p.string(), {{"model", "dicke"}, {"lambda_c", "0.35"}, {"gamma_over_kappa", "0.001"}},
                  "dicke", rows);
    std::ostringstream out, err;
    REQUIRE(fit_divergence_command(p.string(), {0.01, 0.1}, out, err) == kExitOk);
    CHECK(out.str().find("below: slope -1.000000") != std::string::npos);
    CHECK(out.str().find("above: slope -1.000000") != std::string::npos);
    CHECK(err.str().empty());
    std::ostringstream out2, err2;
    REQUIRE(fit_divergence_command(p.string(), {0.005, 0.1}, out2, err2) == kExitOk);
    CHECK(err2.str().find("warning") != std::string::npos);
    CHECK(fit_divergence_command(p.string(), {0.5, 0.6}, out2, err2) == kExitNumerical);
}
