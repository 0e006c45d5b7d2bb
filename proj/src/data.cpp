#include "depmax/data.hpp"

#include "depmax/rng.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace depmax::data {

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

double parse_double(const std::string& cell, const std::string& path,
                    long row) {
  double v = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last)
    throw ParseError(path + ": non-numeric cell '" + cell + "' at row " +
                     std::to_string(row));
  return v;
}

long parse_label(const std::string& cell, const std::string& path, long row) {
  long v = 0;
  auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (ec != std::errc() || ptr != cell.data() + cell.size())
    throw ParseError(path + ": non-integer label '" + cell + "' at row " +
                     std::to_string(row));
  return v;
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open file: " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  return lines;
}

}  // namespace

Paired gen_gaussian_pair(int n, double rho, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("gen_gaussian_pair: n must be >= 1");
  if (!(std::abs(rho) < 1.0))
    throw std::invalid_argument("gen_gaussian_pair: |rho| must be < 1");
  const double c = std::sqrt(1.0 - rho * rho);
  CounterRng rng(seed);
  Paired out;
  out.s.resize(n, 1);
  out.t.resize(n, 1);
  for (int i = 0; i < n; ++i) {
    const auto [z1, z2] = rng.normal_pair();
    out.s(i, 0) = z1;
    out.t(i, 0) = rho * z1 + c * z2;
  }
  return out;
}

Paired gen_discrete_joint(const oracles::DiscreteJoint& joint, int n,
                          std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("gen_discrete_joint: n must be >= 1");
  const Matrix& pmf = joint.pmf;
  const Index r = pmf.rows(), c = pmf.cols();
  std::vector<double> cum;
  cum.reserve(r * c);
  double acc = 0.0;
  for (Index i = 0; i < r; ++i)
    for (Index j = 0; j < c; ++j) {
      acc += pmf(i, j);
      cum.push_back(acc);
    }
  cum.back() = 1.0;

  CounterRng rng(seed);
  Paired out;
  out.s = Matrix::Zero(n, r);
  out.t = Matrix::Zero(n, c);
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    std::size_t cell = 0;
    while (cell + 1 < cum.size() && u >= cum[cell]) ++cell;
    out.s(i, static_cast<Index>(cell) / c) = 1.0;
    out.t(i, static_cast<Index>(cell) % c) = 1.0;
  }
  return out;
}

Labeled gen_two_moons(int n, double noise, std::uint64_t seed) {
  if (n < 2) throw std::invalid_argument("gen_two_moons: n must be >= 2");
  if (noise < 0.0) throw std::invalid_argument("gen_two_moons: noise must be >= 0");
  const int n0 = n / 2;
  const int n1 = n - n0;
  CounterRng rng(seed);
  Labeled out;
  out.x.resize(n, 2);
  out.labels.resize(n);
  out.n_classes = 2;
  for (int i = 0; i < n0; ++i) {
    const double t = M_PI * i / std::max(1, n0 - 1);
    out.x(i, 0) = std::cos(t);
    out.x(i, 1) = std::sin(t);
    out.labels[i] = 0;
  }
  for (int i = 0; i < n1; ++i) {
    const double t = M_PI * i / std::max(1, n1 - 1);
    out.x(n0 + i, 0) = 1.0 - std::cos(t);
    out.x(n0 + i, 1) = 0.5 - std::sin(t);
    out.labels[n0 + i] = 1;
  }
  if (noise > 0.0)
    for (int i = 0; i < n; ++i) {
      const auto [z1, z2] = rng.normal_pair();
      out.x(i, 0) += noise * z1;
      out.x(i, 1) += noise * z2;
    }
  return out;
}

Paired load_paired_csv(const std::string& path) {
  const auto lines = read_lines(path);
  if (lines.empty()) throw ParseError(path + ": empty file");
  const auto header = split(lines[0], ',');
  if (header.size() < 2 || header.size() % 2 != 0 || header[0] != "s_0")
    throw ParseError(path + ": expected header s_0,...,t_0,...");
  const std::size_t d = header.size() / 2;
  for (std::size_t j = 0; j < d; ++j) {
    if (header[j] != "s_" + std::to_string(j) ||
        header[d + j] != "t_" + std::to_string(j))
      throw ParseError(path + ": malformed header column " + header[j]);
  }
  const long n = static_cast<long>(lines.size()) - 1;
  if (n < 1) throw ParseError(path + ": no data rows");
  Paired out;
  out.s.resize(n, d);
  out.t.resize(n, d);
  for (long i = 0; i < n; ++i) {
    const auto cells = split(lines[i + 1], ',');
    if (cells.size() != header.size())
      throw ParseError(path + ": wrong column count at row " +
                       std::to_string(i + 1));
    for (std::size_t j = 0; j < d; ++j) {
      out.s(i, j) = parse_double(cells[j], path, i + 1);
      out.t(i, j) = parse_double(cells[d + j], path, i + 1);
    }
  }
  return out;
}

Labeled load_labeled_csv(const std::string& path) {
  const auto lines = read_lines(path);
  if (lines.empty()) throw ParseError(path + ": empty file");
  const auto header = split(lines[0], ',');
  if (header.size() < 2 || header.back() != "label" || header[0] != "x_0")
    throw ParseError(path + ": expected header x_0,...,label");
  const std::size_t d = header.size() - 1;
  for (std::size_t j = 0; j < d; ++j)
    if (header[j] != "x_" + std::to_string(j))
      throw ParseError(path + ": malformed header column " + header[j]);
  const long n = static_cast<long>(lines.size()) - 1;
  if (n < 1) throw ParseError(path + ": no data rows");
  Labeled out;
  out.x.resize(n, d);
  out.labels.resize(n);
  int max_label = 0;
  for (long i = 0; i < n; ++i) {
    const auto cells = split(lines[i + 1], ',');
    if (cells.size() != header.size())
      throw ParseError(path + ": wrong column count at row " +
                       std::to_string(i + 1));
    for (std::size_t j = 0; j < d; ++j)
      out.x(i, j) = parse_double(cells[j], path, i + 1);
    const long y = parse_label(cells[d], path, i + 1);
    if (y < 0) throw ParseError(path + ": negative label at row " +
                                std::to_string(i + 1));
    out.labels[i] = static_cast<int>(y);
    max_label = std::max(max_label, out.labels[i]);
  }
  out.n_classes = max_label + 1;
  return out;
}

void write_paired_csv(const std::string& path, const Paired& p) {
  if (p.s.rows() != p.t.rows() || p.s.cols() != p.t.cols())
    throw std::invalid_argument("write_paired_csv: shape mismatch");
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for write: " + path);
  const Index d = p.s.cols();
  for (Index j = 0; j < d; ++j) out << "s_" << j << ',';
  for (Index j = 0; j < d; ++j) out << "t_" << j << (j + 1 < d ? "," : "");
  out << '\n';
  for (Index i = 0; i < p.s.rows(); ++i) {
    for (Index j = 0; j < d; ++j) out << fmt17(p.s(i, j)) << ',';
    for (Index j = 0; j < d; ++j)
      out << fmt17(p.t(i, j)) << (j + 1 < d ? "," : "");
    out << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

Paired make_paired(const DatasetSpec& spec) {
  switch (spec.kind) {
    case DatasetKind::gaussian_pair:
      return gen_gaussian_pair(spec.n, spec.rho, spec.seed);
    case DatasetKind::discrete_joint:
      return gen_discrete_joint(oracles::DiscreteJoint(spec.pmf), spec.n,
                                spec.seed);
    case DatasetKind::csv:
      return load_paired_csv(spec.path);
    case DatasetKind::two_moons:
      break;
  }
  throw std::invalid_argument("make_paired: unsupported dataset kind");
}

Labeled make_labeled(const DatasetSpec& spec) {
  switch (spec.kind) {
    case DatasetKind::two_moons:
      return gen_two_moons(spec.n, spec.noise, spec.seed);
    case DatasetKind::csv:
      return load_labeled_csv(spec.path);
    case DatasetKind::gaussian_pair:
    case DatasetKind::discrete_joint:
      break;
  }
  throw std::invalid_argument("make_labeled: unsupported dataset kind");
}

void write_labeled_csv(const std::string& path, const Labeled& dset) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for write: " + path);
  const Index d = dset.x.cols();
  for (Index j = 0; j < d; ++j) out << "x_" << j << ',';
  out << "label\n";
  for (Index i = 0; i < dset.x.rows(); ++i) {
    for (Index j = 0; j < d; ++j) out << fmt17(dset.x(i, j)) << ',';
    out << dset.labels[static_cast<std::size_t>(i)] << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace depmax::data
