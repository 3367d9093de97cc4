#include "dtlfssc/data.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

namespace dtlfssc {

void SyntheticSpec::validate() const
{
    if (clusters < 1) throw ConfigError("clusters must be >= 1");
    if (subspace_dim < 1) throw ConfigError("subspace_dim must be >= 1");
    if (subspace_dim >= ambient_dim) throw ConfigError("subspace_dim must be < ambient_dim");
    if (points_per_cluster < subspace_dim) throw ConfigError("points_per_cluster must be >= subspace_dim");
    if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) throw ConfigError("noise_sigma must be >= 0");
}

SyntheticData generate_synthetic(const SyntheticSpec& spec)
{
    spec.validate();
    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    auto gaussian = [&](Index rows, Index cols) {
        Matrix m(rows, cols);
        for (Index j = 0; j < cols; ++j)
            for (Index i = 0; i < rows; ++i) m(i, j) = normal(rng);
        return m;
    };

    const Index n = spec.ambient_dim;
    const Index d = spec.subspace_dim;
    const Index m = spec.points_per_cluster;
    SyntheticData out;
    out.x.resize(n, spec.clusters * m);
    out.labels.reserve(static_cast<std::size_t>(spec.clusters * m));

    for (Index k = 0; k < spec.clusters; ++k) {
        Eigen::HouseholderQR<Matrix> qr(gaussian(n, d));
        Matrix basis = qr.householderQ() * Matrix::Identity(n, d);
        const Matrix coeffs = gaussian(d, m);
        Matrix points = basis * coeffs;
        if (spec.noise_sigma > 0.0) points += spec.noise_sigma * gaussian(n, m);
        out.x.middleCols(k * m, m) = points;
        out.labels.insert(out.labels.end(), static_cast<std::size_t>(m), static_cast<int>(k));
        out.bases.push_back(std::move(basis));
    }
    return out;
}

Matrix stack_trajectories(std::span<const Matrix> frames)
{
    if (frames.empty()) throw DimensionError("stack_trajectories: no frames");
    const Index n = frames.front().cols();
    Index rows = 0;
    for (const auto& f : frames) {
        if (f.cols() != n) throw DimensionError("stack_trajectories: frames disagree on the number of points");
        rows += f.rows();
    }
    Matrix out(rows, n);
    Index offset = 0;
    for (const auto& f : frames) {
        out.middleRows(offset, f.rows()) = f;
        offset += f.rows();
    }
    return out;
}

Matrix normalize_columns(const Eigen::Ref<const Matrix>& x, Diagnostics* diag)
{
    require_finite(x, "data matrix");
    Matrix out = x;
    Index zeros = 0;
    for (Index j = 0; j < out.cols(); ++j) {
        const double norm = out.col(j).norm();
        if (norm > 0.0) {
            out.col(j) /= norm;
        } else {
            ++zeros;
        }
    }
    if (zeros > 0 && diag != nullptr) diag->warn(std::to_string(zeros) + " zero column(s) left unnormalized");
    return out;
}

namespace {

std::string read_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError("cannot write " + path.string());
    out << text;
    if (!out) throw ParseError("failed while writing " + path.string());
}

std::string_view trim(std::string_view s)
{
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split_lines(std::string_view text)
{
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    while (start <= text.size()) {
        const std::size_t end = text.find('\n', start);
        if (end == std::string_view::npos) {
            lines.push_back(text.substr(start));
            break;
        }
        lines.push_back(text.substr(start, end - start));
        start = end + 1;
    }
    // Trailing blank lines (including the one after a final newline) are not rows.
    while (!lines.empty() && trim(lines.back()).empty()) lines.pop_back();
    return lines;
}

[[noreturn]] void fail_at(std::size_t line, const std::string& what)
{
    throw ParseError("line " + std::to_string(line) + ": " + what);
}

} // namespace

Matrix parse_matrix_csv(std::string_view text)
{
    const auto lines = split_lines(text);
    std::vector<std::vector<double>> rows;
    rows.reserve(lines.size());
    for (std::size_t ln = 0; ln < lines.size(); ++ln) {
        const std::string_view line = trim(lines[ln]);
        if (line.empty()) fail_at(ln + 1, "empty row");
        std::vector<double> row;
        std::size_t start = 0;
        while (true) {
            const std::size_t comma = line.find(',', start);
            const std::string_view tok =
                trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
            double value = 0.0;
            const char* first = tok.data();
            const char* last = tok.data() + tok.size();
            if (!tok.empty() && *first == '+') ++first;
            const auto [ptr, ec] = std::from_chars(first, last, value);
            if (tok.empty() || ec != std::errc() || ptr != last) fail_at(ln + 1, "non-numeric token '" + std::string(tok) + "'");
            if (!std::isfinite(value)) fail_at(ln + 1, "non-finite value");
            row.push_back(value);
            if (comma == std::string_view::npos) break;
            start = comma + 1;
        }
        if (!rows.empty() && row.size() != rows.front().size()) {
            fail_at(ln + 1, "expected " + std::to_string(rows.front().size()) + " columns, found " +
                                std::to_string(row.size()));
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) return Matrix(0, 0);
    Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j) m(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
    return m;
}

std::string format_matrix_csv(const Eigen::Ref<const Matrix>& m)
{
    std::string out;
    char buf[64];
    for (Index i = 0; i < m.rows(); ++i) {
        for (Index j = 0; j < m.cols(); ++j) {
            if (j > 0) out.push_back(',');
            // Shortest representation that parses back to the same double.
            const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), m(i, j));
            out.append(buf, ptr);
        }
        out.push_back('\n');
    }
    return out;
}

Matrix read_matrix_csv(const std::filesystem::path& path)
{
    try {
        return parse_matrix_csv(read_file(path));
    } catch (const ParseError& e) {
        const std::string what = e.what();
        if (what.rfind("cannot open", 0) == 0) throw;
        throw ParseError(path.string() + ": " + what);
    }
}

void write_matrix_csv(const std::filesystem::path& path, const Eigen::Ref<const Matrix>& m)
{
    write_file(path, format_matrix_csv(m));
}

Labels parse_labels(std::string_view text)
{
    Labels labels;
    const auto lines = split_lines(text);
    for (std::size_t ln = 0; ln < lines.size(); ++ln) {
        const std::string_view tok = trim(lines[ln]);
        int value = 0;
        const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
        if (tok.empty() || ec != std::errc() || ptr != tok.data() + tok.size()) {
            fail_at(ln + 1, "expected an integer label, found '" + std::string(tok) + "'");
        }
        if (value < 0) fail_at(ln + 1, "labels must be 0-based nonnegative ids");
        labels.push_back(value);
    }
    return labels;
}

Labels read_labels(const std::filesystem::path& path)
{
    try {
        return parse_labels(read_file(path));
    } catch (const ParseError& e) {
        const std::string what = e.what();
        if (what.rfind("cannot open", 0) == 0) throw;
        throw ParseError(path.string() + ": " + what);
    }
}

void write_labels(const std::filesystem::path& path, const Labels& labels)
{
    std::string out;
    for (int l : labels) {
        out += std::to_string(l);
        out.push_back('\n');
    }
    write_file(path, out);
}

} // namespace dtlfssc
