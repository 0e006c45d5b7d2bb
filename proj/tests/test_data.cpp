#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "depmax/data.hpp"
#include "oracle_helpers.hpp"

#include <filesystem>
#include <fstream>

using namespace depmax;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

double correlation(const Vector& a, const Vector& b) {
  const double ma = a.mean(), mb = b.mean();
  const Eigen::ArrayXd da = a.array() - ma, db = b.array() - mb;
  return (da * db).sum() / std::sqrt(da.square().sum() * db.square().sum());
}

}  // namespace

TEST_CASE("gen_gaussian_pair correlation and variance bands") {
  for (double rho : {0.0, 0.8}) {
    const data::Paired p = data::gen_gaussian_pair(5000, rho, 17);
    const double c = correlation(p.s.col(0), p.t.col(0));
    CHECK(std::abs(c - rho) <= (rho == 0.0 ? 0.03 : 0.02));
    for (const Matrix* m : {&p.s, &p.t}) {
      const double mean = m->col(0).mean();
      const double var = (m->col(0).array() - mean).square().sum() / (5000 - 1);
      CHECK(var >= 0.95);
      CHECK(var <= 1.05);
    }
  }
  CHECK_THROWS_AS(data::gen_gaussian_pair(10, 1.0, 0), std::invalid_argument);
}

TEST_CASE("gen_gaussian_pair is deterministic per seed") {
  const data::Paired a = data::gen_gaussian_pair(100, 0.5, 3);
  const data::Paired b = data::gen_gaussian_pair(100, 0.5, 3);
  const data::Paired c = data::gen_gaussian_pair(100, 0.5, 4);
  CHECK((a.s - b.s).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.t - b.t).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.s - c.s).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("gen_discrete_joint coupling and frequencies") {
  Matrix diag(2, 2);
  diag << 0.5, 0.0, 0.0, 0.5;
  const data::Paired coupled =
      data::gen_discrete_joint(oracles::DiscreteJoint(diag), 500, 21);
  for (Index i = 0; i < 500; ++i) {
    Index r, c;
    coupled.s.row(i).maxCoeff(&r);
    coupled.t.row(i).maxCoeff(&c);
    CHECK(r == c);
  }

  Matrix pmf(2, 3);
  pmf << 0.1, 0.25, 0.15, 0.2, 0.05, 0.25;
  const data::Paired p =
      data::gen_discrete_joint(oracles::DiscreteJoint(pmf), 10000, 22);
  Matrix freq = Matrix::Zero(2, 3);
  for (Index i = 0; i < 10000; ++i) {
    Index r, c;
    p.s.row(i).maxCoeff(&r);
    p.t.row(i).maxCoeff(&c);
    freq(r, c) += 1e-4;
  }
  CHECK((freq - pmf).cwiseAbs().maxCoeff() <= 0.02);
}

TEST_CASE("gen_discrete_joint product pmf has near-zero plug-in MI") {
  Vector px(2), py(3);
  px << 0.3, 0.7;
  py << 0.2, 0.5, 0.3;
  const Matrix pmf = px * py.transpose();
  const data::Paired p =
      data::gen_discrete_joint(oracles::DiscreteJoint(pmf), 10000, 23);
  CHECK(testutil::plugin_discrete_mi(p.s, p.t) <= 0.01);
}

TEST_CASE("gen_two_moons geometry and balance") {
  const data::Labeled clean = data::gen_two_moons(101, 0.0, 0);
  int n0 = 0;
  for (Index i = 0; i < 101; ++i) {
    if (clean.labels[i] == 0) {
      ++n0;
      CHECK(std::abs(clean.x.row(i).norm() - 1.0) <= 1e-12);
      CHECK(clean.x(i, 1) >= -1e-12);
    }
  }
  const int n1 = 101 - n0;
  CHECK(std::abs(n0 - n1) <= 1);

  const data::Labeled a = data::gen_two_moons(64, 0.3, 5);
  const data::Labeled b = data::gen_two_moons(64, 0.3, 5);
  CHECK((a.x - b.x).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("paired csv round trip is bitwise stable") {
  const data::Paired p = data::gen_gaussian_pair(64, 0.6, 31);
  const std::string path = temp_path("depmax_pair_roundtrip.csv");
  data::write_paired_csv(path, p);
  const data::Paired q = data::load_paired_csv(path);
  CHECK(q.s.rows() == 64);
  CHECK((p.s - q.s).cwiseAbs().maxCoeff() == 0.0);
  CHECK((p.t - q.t).cwiseAbs().maxCoeff() == 0.0);

  // a second write of the loaded data is byte-identical
  const std::string path2 = temp_path("depmax_pair_roundtrip2.csv");
  data::write_paired_csv(path2, q);
  std::ifstream f1(path), f2(path2);
  const std::string s1((std::istreambuf_iterator<char>(f1)), {});
  const std::string s2((std::istreambuf_iterator<char>(f2)), {});
  CHECK(s1 == s2);
  std::filesystem::remove(path);
  std::filesystem::remove(path2);
}

TEST_CASE("labeled csv round trip") {
  const data::Labeled d = data::gen_two_moons(32, 0.2, 33);
  const std::string path = temp_path("depmax_labeled_roundtrip.csv");
  data::write_labeled_csv(path, d);
  const data::Labeled e = data::load_labeled_csv(path);
  CHECK((d.x - e.x).cwiseAbs().maxCoeff() == 0.0);
  CHECK(d.labels == e.labels);
  CHECK(e.n_classes == 2);
  std::filesystem::remove(path);
}

TEST_CASE("csv fixture parses exactly") {
  const std::string path = temp_path("depmax_fixture.csv");
  {
    std::ofstream out(path);
    out << "s_0,t_0\n0.5,-1.25\n3.75,0.125\n";
  }
  const data::Paired p = data::load_paired_csv(path);
  CHECK(p.s(0, 0) == 0.5);
  CHECK(p.t(0, 0) == -1.25);
  CHECK(p.s(1, 0) == 3.75);
  CHECK(p.t(1, 0) == 0.125);
  std::filesystem::remove(path);
}

TEST_CASE("csv errors carry the offending row number") {
  const std::string path = temp_path("depmax_badrow.csv");
  {
    std::ofstream out(path);
    out << "s_0,t_0\n";
    for (int i = 1; i <= 6; ++i) out << i << "," << -i << "\n";
    out << "7,oops\n";
  }
  try {
    data::load_paired_csv(path);
    FAIL("expected ParseError");
  } catch (const data::ParseError& e) {
    CHECK(std::string(e.what()).find("row 7") != std::string::npos);
  }
  std::filesystem::remove(path);

  CHECK_THROWS_AS(data::load_paired_csv(temp_path("depmax_missing.csv")),
                  data::ParseError);
}

TEST_CASE("dataset spec builders dispatch on kind") {
  data::DatasetSpec spec;
  spec.kind = data::DatasetKind::gaussian_pair;
  spec.n = 50;
  spec.rho = 0.5;
  spec.seed = 3;
  const data::Paired p = data::make_paired(spec);
  const data::Paired q = data::gen_gaussian_pair(50, 0.5, 3);
  CHECK((p.s - q.s).cwiseAbs().maxCoeff() == 0.0);

  data::DatasetSpec moons;
  moons.kind = data::DatasetKind::two_moons;
  moons.n = 40;
  moons.noise = 0.2;
  moons.seed = 9;
  CHECK(data::make_labeled(moons).x.rows() == 40);
  CHECK_THROWS_AS(data::make_paired(moons), std::invalid_argument);
  CHECK_THROWS_AS(data::make_labeled(spec), std::invalid_argument);
}

TEST_CASE("csv header contract is enforced") {
  const std::string path = temp_path("depmax_badheader.csv");
  {
    std::ofstream out(path);
    out << "a,b\n1,2\n";
  }
  CHECK_THROWS_AS(data::load_paired_csv(path), data::ParseError);
  std::filesystem::remove(path);
}
