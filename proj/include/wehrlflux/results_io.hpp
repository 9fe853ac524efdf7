#pragma once

#include <cmath>
#include <fstream>
#include <limits>
#include <string>
#include <utility>
#include <vector>

namespace wehrlflux {

inline constexpr int kResultSchemaVersion = 1;

/// One CSV row. Quantities that do not apply to a model (gap for dicke, beta
/// for kerr and cavity) are NaN in memory and empty in the file.
struct ResultRow {
    std::string model;
    int N = 1;
    double param = 0.0;  // eps, or lambda for dicke
    double S = 0.0;
    double Phi_ext = 0.0;
    double Phi_q = 0.0;
    double Pi_ext = 0.0;
    double Pi_u = 0.0;
    double Pi_d = 0.0;
    double gap = std::numeric_limits<double>::quiet_NaN();
    double alpha_re = 0.0;
    double alpha_im = 0.0;
    double beta = std::numeric_limits<double>::quiet_NaN();
    double residual = 0.0;
    int n_max_used = 0;
    double wall_time_s = 0.0;
};

/// "eps" for kerr and cavity, "lambda" for dicke.
const char* param_column(const std::string& model);

/// Comma-separated header line for model.
std::string csv_header(const std::string& model);
/// %.17g fields, so that reading back is exact.
std::string format_row(const ResultRow& r);
/// Throws IoError on a malformed line.
ResultRow parse_row(const std::string& line, const std::string& model);

using Metadata = std::vector<std::pair<std::string, std::string>>;

struct ResultTable {
    Metadata meta;  // from '# key: value' lines
    std::string model;
    std::vector<ResultRow> rows;

    /// Value of a metadata key, empty if absent.
    std::string get(const std::string& key) const;
};

/// Writes '#' metadata lines, the header and rows via a temporary file that is
/// renamed into place. Throws IoError.
void write_results(const std::string& path, const Metadata& meta, const std::string& model,
                   const std::vector<ResultRow>& rows);

/// Throws IoError on unreadable or inconsistent files.
ResultTable read_results(const std::string& path);

/// Append-only record of finished rows, so a long run that dies leaves its
/// completed points behind in completion order.
class Journal {
public:
    Journal(const std::string& path, const Metadata& meta, const std::string& model);
    void append(const ResultRow& r);
    /// Deletes the journal once the final file is in place.
    void discard();
    const std::string& path() const { return path_; }

private:
    std::string path_;
    std::ofstream out_;
};

}  // namespace wehrlflux
