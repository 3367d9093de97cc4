#pragma once

#include "dtlfssc/common.hpp"

#include <filesystem>
#include <span>

namespace dtlfssc {

struct SyntheticSpec {
    Index clusters = 3;
    Index ambient_dim = 30;
    Index subspace_dim = 4;
    Index points_per_cluster = 50;
    double noise_sigma = 0.01;
    std::uint64_t seed = 0;

    void validate() const;
};

struct SyntheticData {
    Matrix x;
    Labels labels;
    /// Orthonormal basis (n×d) of each cluster's subspace.
    std::vector<Matrix> bases;
};

/// Union of independent random subspaces, samples grouped by cluster.
SyntheticData generate_synthetic(const SyntheticSpec& spec);

/// Stacks per-frame 2×N point tracks into a 2F×N trajectory matrix.
Matrix stack_trajectories(std::span<const Matrix> frames);

/// Scales every nonzero column to unit ℓ2 norm; zero columns stay zero.
Matrix normalize_columns(const Eigen::Ref<const Matrix>& x, Diagnostics* diag = nullptr);

// Plain-text CSV: one matrix row per line, comma separated, no header.
Matrix read_matrix_csv(const std::filesystem::path& path);
void write_matrix_csv(const std::filesystem::path& path, const Eigen::Ref<const Matrix>& m);
Matrix parse_matrix_csv(std::string_view text);
std::string format_matrix_csv(const Eigen::Ref<const Matrix>& m);

// Label files: one 0-based integer id per line.
Labels read_labels(const std::filesystem::path& path);
void write_labels(const std::filesystem::path& path, const Labels& labels);
Labels parse_labels(std::string_view text);

} // namespace dtlfssc
