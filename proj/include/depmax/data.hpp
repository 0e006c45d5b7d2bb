#pragma once

#include "depmax/common.hpp"
#include "depmax/oracles.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace depmax::data {

struct Paired {
  Matrix s, t;  // row-aligned sample batches
};

struct Labeled {
  Matrix x;
  std::vector<int> labels;
  int n_classes = 0;
};

enum class DatasetKind { gaussian_pair, discrete_joint, two_moons, csv };

struct DatasetSpec {
  DatasetKind kind = DatasetKind::gaussian_pair;
  double rho = 0.0;
  Matrix pmf;
  double noise = 0.0;
  std::string path;
  int n = 0;
  std::uint64_t seed = 0;
};

/// n draws from the standard bivariate Gaussian with correlation rho,
/// via the Cholesky factor of [[1, rho], [rho, 1]].
Paired gen_gaussian_pair(int n, double rho, std::uint64_t seed);

/// n categorical draws from the joint; s = one-hot row index,
/// t = one-hot column index.
Paired gen_discrete_joint(const oracles::DiscreteJoint& pmf, int n,
                          std::uint64_t seed);

/// Two interleaved half-circles with Gaussian coordinate noise; class 0 is
/// the upper unit semicircle, labels balanced by construction.
Labeled gen_two_moons(int n, double noise, std::uint64_t seed);

// CSV contracts (UTF-8, LF, 17 significant digits on write):
//   paired:  header s_0,...,s_{d-1},t_0,...,t_{d-1}
//   labeled: header x_0,...,x_{d-1},label   (integer labels)
// Malformed rows abort with the 1-based data row number.

Paired load_paired_csv(const std::string& path);
Labeled load_labeled_csv(const std::string& path);
void write_paired_csv(const std::string& path, const Paired& p);
void write_labeled_csv(const std::string& path, const Labeled& d);

/// Builders dispatching on DatasetSpec::kind. Paired specs accept
/// gaussian_pair, discrete_joint and csv; labeled specs accept two_moons
/// and csv (path = labeled file).
Paired make_paired(const DatasetSpec& spec);
Labeled make_labeled(const DatasetSpec& spec);

/// Parse failure in an input file; message carries path and row.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace depmax::data
