#pragma once

#include "wpsc/types.hpp"

#include <filesystem>
#include <random>
#include <string>

namespace testsupport {

inline wpsc::Matrix random_matrix(int rows, int cols, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n(0.0, 1.0);
    wpsc::Matrix m(rows, cols);
    for (int j = 0; j < cols; ++j)
        for (int i = 0; i < rows; ++i) m(i, j) = n(rng);
    return m;
}

// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& tag) {
    auto dir = std::filesystem::temp_directory_path() / ("wpsc_test_" + tag);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

inline int numerical_rank(const wpsc::Matrix& m, double rel = 1e-10) {
    Eigen::JacobiSVD<wpsc::Matrix> svd(m);
    const auto& s = svd.singularValues();
    if (s.size() == 0 || s(0) == 0.0) return 0;
    int r = 0;
    while (r < s.size() && s(r) > rel * s(0)) ++r;
    return r;
}

}  // namespace testsupport
