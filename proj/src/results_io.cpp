#include "wehrlflux/results_io.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <sstream>

#include "wehrlflux/errors.hpp"

namespace wehrlflux {

namespace {

const char* kColumns[] = {"model", "N",     "",       "S",     "Phi_ext",  "Phi_q",
                          "Pi_ext", "Pi_u", "Pi_d",   "gap",   "alpha_re", "alpha_im",
                          "beta",  "residual", "n_max_used", "wall_time_s"};
constexpr int kNumColumns = 16;

void put(std::string& out, double v) {
    out += ',';
    if (std::isnan(v)) return;
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out += buf;
}

double get_double(const std::string& field, const std::string& line) {
    if (field.empty()) return std::numeric_limits<double>::quiet_NaN();
    const char* s = field.c_str();
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(s, &end);
    if (end == s || *end != '\0' || (errno == ERANGE && std::isinf(v))) throw IoError("bad number '" + field + "' in row: " + line);
    return v;
}

int get_int(const std::string& field, const std::string& line) {
    const char* s = field.c_str();
    char* end = nullptr;
    const long v = std::strtol(s, &end, 10);
    if (field.empty() || *end != '\0') throw IoError("bad integer '" + field + "' in row: " + line);
    return static_cast<int>(v);
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

void write_preamble(std::ostream& out, const Metadata& meta, const std::string& model) {
    for (const auto& [k, v] : meta) out << "# " << k << ": " << v << '\n';
    out << csv_header(model) << '\n';
}

}  // namespace

const char* param_column(const std::string& model) { return model == "dicke" ? "lambda" : "eps"; }

std::string csv_header(const std::string& model) {
    std::string h;
    for (int k = 0; k < kNumColumns; ++k) {
        if (k) h += ',';
        h += k == 2 ? param_column(model) : kColumns[k];
    }
    return h;
}

std::string format_row(const ResultRow& r) {
    std::string out = r.model;
    out += ',' + std::to_string(r.N);
    for (double v : {r.param, r.S, r.Phi_ext, r.Phi_q, r.Pi_ext, r.Pi_u, r.Pi_d, r.gap, r.alpha_re,
                     r.alpha_im, r.beta, r.residual})
        put(out, v);
    out += ',' + std::to_string(r.n_max_used);
    put(out, r.wall_time_s);
    return out;
}

ResultRow parse_row(const std::string& line, const std::string& model) {
    const auto f = split(line);
    if (static_cast<int>(f.size()) != kNumColumns)
        throw IoError("expected " + std::to_string(kNumColumns) + " columns in row: " + line);
    if (f[0] != model) throw IoError("row model '" + f[0] + "' differs from '" + model + "'");
    ResultRow r;
    r.model = f[0];
    r.N = get_int(f[1], line);
    double* slots[] = {&r.param, &r.S,  &r.Phi_ext,  &r.Phi_q,    &r.Pi_ext, &r.Pi_u,
                       &r.Pi_d,  &r.gap, &r.alpha_re, &r.alpha_im, &r.beta,   &r.residual};
    for (int k = 0; k < 12; ++k) *slots[k] = get_double(f[2 + k], line);
    r.n_max_used = get_int(f[14], line);
    r.wall_time_s = get_double(f[15], line);
    return r;
}

std::string ResultTable::get(const std::string& key) const {
    for (const auto& [k, v] : meta)
        if (k == key) return v;
    return {};
}

void write_results(const std::string& path, const Metadata& meta, const std::string& model,
                   const std::vector<ResultRow>& rows) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    std::error_code ec;
    if (target.has_parent_path()) fs::create_directories(target.parent_path(), ec);
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open " + tmp + " for writing");
        write_preamble(out, meta, model);
        for (const auto& r : rows) out << format_row(r) << '\n';
        out.flush();
        if (!out) throw IoError("write to " + tmp + " failed");
    }
    fs::rename(tmp, target, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw IoError("cannot move results into " + path);
    }
}

ResultTable read_results(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path);
    ResultTable t;
    std::string line;
    bool header = false;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') {
            const auto colon = line.find(':');
            if (colon == std::string::npos) continue;
            auto trim = [](std::string s) {
                const auto a = s.find_first_not_of(' ');
                const auto b = s.find_last_not_of(' ');
                return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
            };
            t.meta.emplace_back(trim(line.substr(1, colon - 1)), trim(line.substr(colon + 1)));
            continue;
        }
        if (!header) {
            t.model = t.get("model");
            if (t.model.empty()) {
                // no metadata: infer from the parameter column
                t.model = line.find(",lambda,") != std::string::npos ? "dicke" : "kerr";
            }
            if (line != csv_header(t.model))
                throw IoError(path + ":" + std::to_string(lineno) + ": unexpected header '" + line + "'");
            header = true;
            continue;
        }
        try {
            t.rows.push_back(parse_row(line, t.model));
        } catch (const IoError& e) {
            throw IoError(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    if (!header) throw IoError(path + ": no header line");
    return t;
}

Journal::Journal(const std::string& path, const Metadata& meta, const std::string& model)
    : path_(path) {
    namespace fs = std::filesystem;
    std::error_code ec;
    const fs::path p(path);
    if (p.has_parent_path()) fs::create_directories(p.parent_path(), ec);
    out_.open(path, std::ios::binary | std::ios::trunc);
    if (!out_) throw IoError("cannot open journal " + path);
    write_preamble(out_, meta, model);
    out_.flush();
}

void Journal::append(const ResultRow& r) {
    out_ << format_row(r) << '\n';
    out_.flush();
    if (!out_) throw IoError("write to journal " + path_ + " failed");
}

void Journal::discard() {
    out_.close();
    std::error_code ec;
    std::filesystem::remove(path_, ec);
}

}  // namespace wehrlflux
