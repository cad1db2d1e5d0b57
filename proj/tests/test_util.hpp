#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <random>

#include <gtest/gtest.h>

#include "fidlens/error.hpp"
#include "fidlens/types.hpp"

// Asserts that `stmt` throws fidlens::Error of the given kind.
#define EXPECT_FIDLENS_ERROR(stmt, error_kind)                            \
  do {                                                                    \
    try {                                                                 \
      stmt;                                                               \
      ADD_FAILURE() << "expected " << ::fidlens::ToString(error_kind);    \
    } catch (const ::fidlens::Error& e) {                                 \
      EXPECT_EQ(e.kind(), error_kind) << e.what();                        \
    }                                                                     \
  } while (0)

namespace fidlens::testing {

inline FeatureMatrix RandomMatrix(Eigen::Index n, Eigen::Index d,
                                  std::uint64_t seed, double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, scale);
  FeatureMatrix m(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) m(i, j) = normal(rng);
  }
  return m;
}

inline Vector RandomVector(Eigen::Index d, std::uint64_t seed, double scale = 1.0) {
  return RandomMatrix(d, 1, seed, scale).col(0);
}

// A A^T / d + floor * I with Gaussian A: well conditioned for floor ~ 0.5.
inline Matrix RandomSpd(Eigen::Index d, std::uint64_t seed, double floor = 0.5) {
  const FeatureMatrix a = RandomMatrix(d, d, seed);
  Matrix m = a * a.transpose() / static_cast<double>(d);
  m += floor * Matrix::Identity(d, d);
  return (m + m.transpose()) / 2.0;
}

inline GaussianStats RandomStats(Eigen::Index d, std::uint64_t seed,
                                 std::size_t count = 1000) {
  GaussianStats s;
  s.mean = RandomVector(d, seed * 2 + 1);
  s.cov = RandomSpd(d, seed * 2 + 2);
  s.count = count;
  return s;
}

inline double RelErr(double got, double want) {
  return std::abs(got - want) / std::max(std::abs(want), 1e-300);
}

template <typename A, typename B>
double RelErr(const A& got, const B& want) {
  return (got - want).norm() / std::max(want.norm(), 1e-300);
}

// Independent oracle: explicit loops, mean first, then centered products.
inline GaussianStats TwoPassOracle(const FeatureMatrix& x) {
  const Eigen::Index n = x.rows();
  const Eigen::Index d = x.cols();
  GaussianStats s;
  s.count = static_cast<std::size_t>(n);
  s.mean = Vector::Zero(d);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) s.mean[j] += x(i, j);
  }
  s.mean /= static_cast<double>(n);
  s.cov = Matrix::Zero(d, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index a = 0; a < d; ++a) {
      for (Eigen::Index b = 0; b < d; ++b) {
        s.cov(a, b) += (x(i, a) - s.mean[a]) * (x(i, b) - s.mean[b]);
      }
    }
  }
  s.cov /= static_cast<double>(n - 1);
  return s;
}

// Weighted oracle with linear weights, denominator sum(w).
inline GaussianStats WeightedOracle(const FeatureMatrix& x, const Vector& w) {
  const Eigen::Index n = x.rows();
  const Eigen::Index d = x.cols();
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) total += w[i];
  GaussianStats s;
  s.count = static_cast<std::size_t>(n);
  s.mean = Vector::Zero(d);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) s.mean[j] += w[i] * x(i, j);
  }
  s.mean /= total;
  s.cov = Matrix::Zero(d, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index a = 0; a < d; ++a) {
      for (Eigen::Index b = 0; b < d; ++b) {
        s.cov(a, b) += w[i] * (x(i, a) - s.mean[a]) * (x(i, b) - s.mean[b]);
      }
    }
  }
  s.cov /= total;
  return s;
}

// Central differences of a scalar function of a vector.
inline Vector CentralDifference(const std::function<double(const Vector&)>& f,
                                const Vector& x, double step) {
  Vector g(x.size());
  Vector probe = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + step;
    const double up = f(probe);
    probe[i] = x[i] - step;
    const double down = f(probe);
    probe[i] = x[i];
    g[i] = (up - down) / (2.0 * step);
  }
  return g;
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    std::string name = "fidlens_test";
    if (info) name += std::string("_") + info->test_suite_name() + "_" + info->name();
    path_ = std::filesystem::temp_directory_path() / name;
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() { std::filesystem::remove_all(path_); }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::string operator/(const std::string& leaf) const { return (path_ / leaf).string(); }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace fidlens::testing
