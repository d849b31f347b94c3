#include "thermokam/mathcore.hpp"

#include <doctest.h>

#include <numbers>
#include <random>

using namespace thermokam;
using doctest::Approx;

namespace {

TorusPotential cosine_x(Eigen::Index dim) {
  Eigen::VectorXi k = Eigen::VectorXi::Zero(dim);
  k(0) = 1;
  return TorusPotential(dim, {{k, 1.0, 0.0}});
}

TorusPotential mixed_potential() {
  return TorusPotential(2, {{Eigen::Vector2i(1, 0), 0.7, -0.2}, {Eigen::Vector2i(1, -1), 0.1, 0.4},
                            {Eigen::Vector2i(0, 1), -0.3, 0.05}});
}

}  // namespace

TEST_CASE("inner product examples") {
  const FlatMetric id = FlatMetric::identity(2);
  CHECK(inner(id, Eigen::Vector2d(1, 0), Eigen::Vector2d(0, 1)) == 0.0);
  CHECK(inner(id, Eigen::Vector2d(3, 4), Eigen::Vector2d(3, 4)) == 25.0);
  const FlatMetric g(Eigen::Vector2d(2, 1).asDiagonal().toDenseMatrix());
  CHECK(inner(g, Eigen::Vector2d(1, 0), Eigen::Vector2d(1, 0)) == Approx(0.5).epsilon(1e-15));
}

TEST_CASE("inner product rejects a dimension mismatch") {
  const FlatMetric id = FlatMetric::identity(2);
  CHECK_THROWS_AS(inner(id, Eigen::Vector3d(1, 0, 0), Eigen::Vector3d(1, 0, 0)), std::invalid_argument);
}

TEST_CASE("metric construction validates symmetry and definiteness") {
  Eigen::Matrix2d asym;
  asym << 1, 0.5, 0, 1;
  CHECK_THROWS(FlatMetric(asym));
  Eigen::Matrix2d indefinite;
  indefinite << 1, 0, 0, -1;
  CHECK_THROWS(FlatMetric(indefinite));
}

TEST_CASE("flat and sharp are inverse to each other") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1, 1);
  Eigen::Matrix3d a;
  for (int i = 0; i < 9; ++i) a(i / 3, i % 3) = u(rng);
  const FlatMetric g(a * a.transpose() + Eigen::Matrix3d::Identity());
  CHECK((g.g() * g.dual() - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() < 1e-12);
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::Vector3d c(u(rng), u(rng), u(rng));
    CHECK((g.flat(g.sharp(c)) - c).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("potential examples") {
  const TorusPotential zero = TorusPotential::zero(2);
  CHECK(zero.value(Eigen::Vector2d(0.3, 0.1)) == 0.0);
  CHECK(zero.gradient(Eigen::Vector2d(0.3, 0.1)).isZero());

  const TorusPotential v = cosine_x(2);
  CHECK(v.value(Eigen::Vector2d(0, 0)) == Approx(1.0));
  CHECK(v.gradient(Eigen::Vector2d(0, 0)).norm() < 1e-15);
  CHECK(v.gradient(Eigen::Vector2d(0.25, 0))(0) == Approx(-2 * std::numbers::pi).epsilon(1e-14));
}

TEST_CASE("potential is periodic on the integer lattice") {
  const TorusPotential v = mixed_potential();
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1, 1);
  std::uniform_int_distribution<int> m(-5, 5);
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::Vector2d q(u(rng), u(rng));
    const Eigen::Vector2d shift(m(rng), m(rng));
    CHECK(std::abs(v.value(Eigen::Vector2d(q + shift)) - v.value(q)) < 1e-12);
  }
}

TEST_CASE("potential gradient matches central differences") {
  const TorusPotential v = mixed_potential();
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(0, 1);
  double worst = 0.0;
  const double h = 1e-5;
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::Vector2d q(u(rng), u(rng));
    const Eigen::Vector2d grad = v.gradient(q);
    for (int i = 0; i < 2; ++i) {
      Eigen::Vector2d e = Eigen::Vector2d::Zero();
      e(i) = h;
      const double fd = (v.value(Eigen::Vector2d(q + e)) - v.value(Eigen::Vector2d(q - e))) / (2 * h);
      worst = std::max(worst, std::abs(fd - grad(i)));
    }
  }
  CHECK(worst < 1e-8);
}

TEST_CASE("potential JSON round trip and validation") {
  const nlohmann::json j = {{"dim", 2}, {"modes", {{{"k", {1, 0}}, {"cos", 0.5}, {"sin", 0.25}}}}};
  const Potential p = potential_from_json(j);
  CHECK(potential_dim(p) == 2);
  CHECK(potential_to_json(p) == j);
  const Eigen::Vector2d q(0.1, 0.2);
  CHECK(potential_value(p, q) == Approx(0.5 * std::cos(0.2 * std::numbers::pi) + 0.25 * std::sin(0.2 * std::numbers::pi)));

  CHECK_THROWS(potential_from_json({{"dim", 2}, {"modes", {{{"k", {1}}, {"cos", 1.0}}}}}));
  CHECK_THROWS(potential_from_json({{"modes", nlohmann::json::array()}}));
}

TEST_CASE("unit covectors") {
  const FlatMetric g(Eigen::Vector2d(4, 1).asDiagonal().toDenseMatrix());
  const UnitCovector c(g, Eigen::Vector2d(1, 1));
  CHECK(norm2(g, c.components()) == Approx(1.0).epsilon(1e-14));
  CHECK_FALSE(c.exact());

  const UnitCovector e1 = UnitCovector::axis(FlatMetric::identity(3), 0);
  CHECK(e1.exact());
  CHECK(e1.components() == Eigen::Vector3d(1, 0, 0));

  const Eigen::MatrixXd P = c.projector(g);
  const Eigen::Vector2d v(0.3, -0.7);
  CHECK((P * v - inner(g, c.components(), v) * c.components()).norm() < 1e-14);
  CHECK((P * P - P).norm() < 1e-14);
}
