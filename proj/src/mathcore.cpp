#include "thermokam/mathcore.hpp"

#include <Eigen/Eigenvalues>

namespace thermokam {

FlatMetric::FlatMetric(Eigen::MatrixXd g) : g_(std::move(g)) {
  if (g_.rows() == 0 || g_.rows() != g_.cols()) throw std::invalid_argument("metric must be a nonempty square matrix");
  if ((g_ - g_.transpose()).cwiseAbs().maxCoeff() > 1e-12) throw std::invalid_argument("metric is not symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(g_);
  if (eig.eigenvalues().minCoeff() <= 0.0) throw std::invalid_argument("metric is not positive definite");
  identity_ = g_.isIdentity(0.0);
  g_inv_ = identity_ ? g_ : Eigen::MatrixXd(g_.inverse());
  const Eigen::Index n = g_.rows();
  if ((g_ * g_inv_ - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff() > 1e-12)
    throw std::invalid_argument("metric too ill-conditioned to invert");
}

FlatMetric FlatMetric::identity(Eigen::Index dim) { return FlatMetric(Eigen::MatrixXd::Identity(dim, dim)); }

TorusPotential::TorusPotential(Eigen::Index dim, std::vector<Mode> modes) : dim_(dim), modes_(std::move(modes)) {
  if (dim_ < 1) throw std::invalid_argument("potential dimension must be positive");
  for (const auto& m : modes_) {
    if (m.k.size() != dim_) throw std::invalid_argument("potential mode wavevector has wrong dimension");
    if (!std::isfinite(m.cos) || !std::isfinite(m.sin)) throw std::invalid_argument("potential amplitude not finite");
  }
}

HarmonicPotential::HarmonicPotential(Eigen::Index dim, double stiffness) : dim_(dim), stiffness_(stiffness) {
  if (dim_ < 1) throw std::invalid_argument("potential dimension must be positive");
  if (!(stiffness_ > 0.0)) throw std::invalid_argument("harmonic stiffness must be positive");
}

Potential potential_from_json(const nlohmann::json& j) {
  const auto dim = j.at("dim").get<Eigen::Index>();
  const std::string kind = j.value("kind", std::string("torus"));
  if (kind == "harmonic") return HarmonicPotential(dim, j.at("stiffness").get<double>());
  if (kind != "torus") throw std::invalid_argument("unknown potential kind '" + kind + "'");
  std::vector<TorusPotential::Mode> modes;
  for (const auto& m : j.value("modes", nlohmann::json::array())) {
    const auto k = m.at("k").get<std::vector<int>>();
    TorusPotential::Mode mode;
    mode.k = Eigen::Map<const Eigen::VectorXi>(k.data(), static_cast<Eigen::Index>(k.size()));
    mode.cos = m.value("cos", 0.0);
    mode.sin = m.value("sin", 0.0);
    modes.push_back(std::move(mode));
  }
  return TorusPotential(dim, std::move(modes));
}

nlohmann::json potential_to_json(const Potential& v) {
  if (const auto* h = std::get_if<HarmonicPotential>(&v))
    return {{"kind", "harmonic"}, {"dim", h->dim()}, {"stiffness", h->stiffness()}};
  const auto& t = std::get<TorusPotential>(v);
  nlohmann::json modes = nlohmann::json::array();
  for (const auto& m : t.modes()) {
    modes.push_back({{"k", std::vector<int>(m.k.data(), m.k.data() + m.k.size())}, {"cos", m.cos}, {"sin", m.sin}});
  }
  return {{"dim", t.dim()}, {"modes", modes}};
}

UnitCovector::UnitCovector(const FlatMetric& metric, const Eigen::VectorXd& components) {
  const double len2 = norm2(metric, components);
  if (!(len2 > 0.0)) throw std::invalid_argument("cannot normalize a zero covector");
  c_ = components / std::sqrt(len2);
}

UnitCovector UnitCovector::axis(const FlatMetric& metric, Eigen::Index i) {
  if (i < 0 || i >= metric.dim()) throw std::out_of_range("axis index");
  UnitCovector u;
  if (metric.is_identity()) {
    u.c_ = Eigen::VectorXd::Unit(metric.dim(), i);
    u.exact_ = true;
  } else {
    u = UnitCovector(metric, metric.g().col(i));
  }
  return u;
}

Eigen::MatrixXd UnitCovector::projector(const FlatMetric& metric) const {
  return c_ * metric.sharp(c_).transpose();
}

}  // namespace thermokam
