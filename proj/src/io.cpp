#include "kliep/io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace kliep::io {

namespace {

std::string read_text(const std::filesystem::path& file)
{
    std::ifstream in(file, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open '" + file.string() + "' for reading");
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::string> split(const std::string& text, char sep)
{
    std::vector<std::string> out;
    std::string cur;
    for (const char c : text) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double to_double(const std::string& s)
{
    const std::string t = trim(s);
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
    if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) {
        throw std::invalid_argument("not a number: '" + t + "'");
    }
    return value;
}

int to_int(const std::string& s)
{
    const std::string t = trim(s);
    int value = 0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
    if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) {
        throw std::invalid_argument("not an integer: '" + t + "'");
    }
    return value;
}

std::vector<std::string> lines_of(const std::string& text)
{
    std::vector<std::string> lines;
    for (auto& line : split(text, '\n')) {
        line = trim(line);
        if (!line.empty()) {
            lines.push_back(line);
        }
    }
    return lines;
}

} // namespace

std::string format_double(double value)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    return buf;
}

void write_text(const std::filesystem::path& file, const std::string& text)
{
    if (file.has_parent_path()) {
        std::filesystem::create_directories(file.parent_path());
    }
    std::ofstream out(file, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw std::runtime_error("cannot open '" + file.string() + "' for writing");
    }
    out << text;
    if (!out) {
        throw std::runtime_error("failed writing '" + file.string() + "'");
    }
}

std::string format_samples(const SampleSet& x)
{
    std::string out;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        for (int j = 0; j < x.dims(); ++j) {
            if (j > 0) {
                out.push_back(',');
            }
            out += format_double(x.matrix()(i, j));
        }
        out.push_back('\n');
    }
    return out;
}

void write_samples(const std::filesystem::path& file, const SampleSet& x)
{
    write_text(file, format_samples(x));
}

SampleSet parse_samples(const std::string& text)
{
    const auto lines = lines_of(text);
    if (lines.empty()) {
        throw std::invalid_argument("sample file is empty");
    }
    const auto width = split(lines.front(), ',').size();
    Eigen::MatrixXd data(static_cast<Eigen::Index>(lines.size()), static_cast<Eigen::Index>(width));
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const auto fields = split(lines[i], ',');
        if (fields.size() != width) {
            throw std::invalid_argument("row " + std::to_string(i + 1) + " has " +
                                        std::to_string(fields.size()) + " fields, expected " +
                                        std::to_string(width));
        }
        for (std::size_t j = 0; j < width; ++j) {
            data(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = to_double(fields[j]);
        }
    }
    return SampleSet(std::move(data));
}

SampleSet read_samples(const std::filesystem::path& file)
{
    try {
        return parse_samples(read_text(file));
    } catch (const std::invalid_argument& e) {
        throw std::invalid_argument(file.string() + ": " + e.what());
    }
}

void write_truth(const std::filesystem::path& file, const std::vector<FactorIndex>& edges)
{
    std::string out = "u,v\n";
    for (const auto& e : edges) {
        out += std::to_string(e.u) + "," + std::to_string(e.v) + "\n";
    }
    write_text(file, out);
}

std::vector<FactorIndex> read_truth(const std::filesystem::path& file)
{
    const auto lines = lines_of(read_text(file));
    if (lines.empty() || lines.front() != "u,v") {
        throw std::invalid_argument(file.string() + ": truth file must start with header 'u,v'");
    }
    std::vector<FactorIndex> edges;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto fields = split(lines[i], ',');
        if (fields.size() != 2) {
            throw std::invalid_argument(file.string() + ": malformed edge row '" + lines[i] + "'");
        }
        const FactorIndex e{to_int(fields[0]), to_int(fields[1])};
        if (e.v < 1 || e.u <= e.v) {
            throw std::invalid_argument(file.string() + ": edge rows need u > v >= 1");
        }
        edges.push_back(e);
    }
    return edges;
}

std::vector<double> parse_grid(const std::string& spec)
{
    if (spec.rfind("log:", 0) == 0) {
        const auto parts = split(spec.substr(4), ':');
        if (parts.size() != 3) {
            throw std::invalid_argument("grid spec must look like log:lo:hi:count");
        }
        return log_grid(to_double(parts[0]), to_double(parts[1]), to_int(parts[2]));
    }
    std::vector<double> grid;
    for (const auto& f : split(spec, ',')) {
        grid.push_back(to_double(f));
    }
    return grid;
}

std::vector<int> parse_int_list(const std::string& text)
{
    std::vector<int> out;
    for (const auto& f : split(text, ',')) {
        out.push_back(to_int(f));
    }
    return out;
}

void write_path(const std::filesystem::path& file, const RegPath& path, int d)
{
    const auto factors = enumerate_factors(d);
    std::string out = "lambda2,u,v,group_norm\n";
    for (const auto& point : path.points) {
        const std::string lam = format_double(point.lambda2);
        for (std::size_t t = 0; t < factors.size(); ++t) {
            out += lam + "," + std::to_string(factors[t].u) + "," + std::to_string(factors[t].v) +
                   "," + format_double(point.group_norms.at(t)) + "\n";
        }
    }
    write_text(file, out);
}

PathTable read_path(const std::filesystem::path& file)
{
    const auto lines = lines_of(read_text(file));
    if (lines.empty() || lines.front() != "lambda2,u,v,group_norm") {
        throw std::invalid_argument(file.string() + ": path file must start with header "
                                                    "'lambda2,u,v,group_norm'");
    }
    PathTable table;
    std::vector<std::pair<FactorIndex, double>> current;
    auto flush = [&]() {
        if (current.empty()) {
            return;
        }
        int d = 0;
        for (const auto& [f, norm] : current) {
            d = std::max(d, f.u);
        }
        if (table.d == 0) {
            table.d = d;
        }
        if (d != table.d || current.size() != num_factors(d)) {
            throw std::invalid_argument(file.string() + ": incomplete factor list at lambda2=" +
                                        format_double(table.lambda2.back()));
        }
        std::vector<double> norms(current.size());
        for (const auto& [f, norm] : current) {
            norms[factor_position(f, d)] = norm;
        }
        table.norms.push_back(std::move(norms));
        current.clear();
    };
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto fields = split(lines[i], ',');
        if (fields.size() != 4) {
            throw std::invalid_argument(file.string() + ": malformed path row '" + lines[i] + "'");
        }
        const double lam = to_double(fields[0]);
        if (table.lambda2.empty() || lam != table.lambda2.back()) {
            flush();
            table.lambda2.push_back(lam);
        }
        current.push_back({FactorIndex{to_int(fields[1]), to_int(fields[2])}, to_double(fields[3])});
    }
    flush();
    if (table.lambda2.empty()) {
        throw std::invalid_argument(file.string() + ": path file has no rows");
    }
    return table;
}

} // namespace kliep::io
