#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "kliep/evaluation.hpp"
#include "kliep/ratio_model.hpp"

namespace kliep::io {

/// Sample CSV: no header, one observation per row, 17 significant digits.
void write_samples(const std::filesystem::path& file, const SampleSet& x);
std::string format_samples(const SampleSet& x);
SampleSet read_samples(const std::filesystem::path& file);
SampleSet parse_samples(const std::string& text);

/// Truth CSV: header "u,v", 1-based indices with u > v.
void write_truth(const std::filesystem::path& file, const std::vector<FactorIndex>& edges);
std::vector<FactorIndex> read_truth(const std::filesystem::path& file);

/// "log:lo:hi:count" (log-spaced, descending) or a comma-separated list.
std::vector<double> parse_grid(const std::string& spec);

/// Comma-separated integers, e.g. "40,60,80".
std::vector<int> parse_int_list(const std::string& text);

/// Path CSV with header "lambda2,u,v,group_norm"; one row per grid point and
/// factor, grid order outermost.
void write_path(const std::filesystem::path& file, const RegPath& path, int d);

struct PathTable
{
    int d = 0;
    std::vector<double> lambda2;
    /// norms[j][t]: group norm of factor t at grid point j.
    std::vector<std::vector<double>> norms;
};

PathTable read_path(const std::filesystem::path& file);

std::string format_double(double value);

void write_text(const std::filesystem::path& file, const std::string& text);

} // namespace kliep::io
