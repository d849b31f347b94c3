#include "thermokam/series.hpp"
#include "thermokam/linalg.hpp"

#include <algorithm>
#include <limits>
#include <sstream>

namespace thermokam {

VariableTable::VariableTable(std::vector<Variable> variables) : variables_(std::move(variables)) {
  for (std::size_t i = 0; i < variables_.size(); ++i) {
    if (variables_[i].weight < 1) throw std::invalid_argument("variable weight must be positive");
    for (std::size_t j = 0; j < i; ++j) {
      if (variables_[j].name == variables_[i].name)
        throw std::invalid_argument("duplicate variable '" + variables_[i].name + "'");
    }
  }
}

std::size_t VariableTable::index(const std::string& name) const {
  for (std::size_t i = 0; i < variables_.size(); ++i) {
    if (variables_[i].name == name) return i;
  }
  throw std::out_of_range("no variable named '" + name + "'");
}

TablePtr make_table(std::vector<VariableTable::Variable> variables) {
  return std::make_shared<const VariableTable>(std::move(variables));
}

// ---------------------------------------------------------------------------

GradedPoly::GradedPoly(TablePtr table, int order) : table_(std::move(table)), order_(order) {
  if (!table_) throw std::invalid_argument("GradedPoly: null variable table");
  if (order_ < 0) throw std::invalid_argument("GradedPoly: negative order");
}

GradedPoly GradedPoly::constant(TablePtr table, int order, const Rational& value) {
  GradedPoly p(std::move(table), order);
  p.add_term(Exponents(p.table_->size(), 0), value);
  return p;
}

GradedPoly GradedPoly::variable(TablePtr table, int order, const std::string& name) {
  GradedPoly p(std::move(table), order);
  Exponents e(p.table_->size(), 0);
  e[p.table_->index(name)] = 1;
  p.add_term(e, Rational(1));
  return p;
}

GradedPoly GradedPoly::monomial(TablePtr table, int order, Exponents exponents, const Rational& coefficient) {
  GradedPoly p(std::move(table), order);
  if (exponents.size() != p.table_->size()) throw std::invalid_argument("monomial: exponent length mismatch");
  p.add_term(exponents, coefficient);
  return p;
}

int GradedPoly::weighted_degree(const Exponents& e) const {
  int d = 0;
  for (std::size_t i = 0; i < e.size(); ++i) d += e[i] * (*table_)[i].weight;
  return d;
}

int GradedPoly::valuation() const {
  int v = order_ + 1;
  for (const auto& [e, c] : terms_) v = std::min(v, weighted_degree(e));
  return v;
}

Rational GradedPoly::coefficient(const Exponents& e) const {
  auto it = terms_.find(e);
  return it == terms_.end() ? Rational(0) : it->second;
}

Rational GradedPoly::coefficient(const std::map<std::string, int>& powers) const {
  Exponents e(table_->size(), 0);
  for (const auto& [name, k] : powers) e[table_->index(name)] = k;
  return coefficient(e);
}

void GradedPoly::add_term(const Exponents& e, const Rational& c) {
  if (c == 0 || weighted_degree(e) > order_) return;
  auto [it, inserted] = terms_.try_emplace(e, c);
  if (!inserted) {
    it->second += c;
    if (it->second == 0) terms_.erase(it);
  }
}

GradedPoly GradedPoly::homogeneous_part(int degree) const {
  GradedPoly out(table_, order_);
  for (const auto& [e, c] : terms_) {
    if (weighted_degree(e) == degree) out.terms_.emplace(e, c);
  }
  return out;
}

GradedPoly GradedPoly::truncated(int order) const {
  GradedPoly out(table_, order);
  for (const auto& [e, c] : terms_) out.add_term(e, c);
  return out;
}

GradedPoly GradedPoly::derivative(std::size_t var) const {
  if (var >= table_->size()) throw std::out_of_range("derivative: variable index");
  GradedPoly out(table_, order_);
  for (const auto& [e, c] : terms_) {
    if (e[var] == 0) continue;
    Exponents d = e;
    --d[var];
    out.add_term(d, c * e[var]);
  }
  return out;
}

void GradedPoly::check_compatible(const GradedPoly& rhs) const {
  if (table_ != rhs.table_ && !(*table_ == *rhs.table_))
    throw std::invalid_argument("GradedPoly: variable-table mismatch");
  if (order_ != rhs.order_) throw std::invalid_argument("GradedPoly: truncation order mismatch");
}

GradedPoly& GradedPoly::operator+=(const GradedPoly& rhs) {
  check_compatible(rhs);
  for (const auto& [e, c] : rhs.terms_) add_term(e, c);
  return *this;
}

GradedPoly& GradedPoly::operator-=(const GradedPoly& rhs) {
  check_compatible(rhs);
  for (const auto& [e, c] : rhs.terms_) add_term(e, -c);
  return *this;
}

GradedPoly& GradedPoly::operator*=(const GradedPoly& rhs) {
  check_compatible(rhs);
  GradedPoly out(table_, order_);
  std::vector<std::pair<int, const TermMap::value_type*>> right;
  right.reserve(rhs.terms_.size());
  for (const auto& t : rhs.terms_) right.emplace_back(weighted_degree(t.first), &t);
  Exponents e(table_->size());
  for (const auto& [ea, ca] : terms_) {
    const int da = weighted_degree(ea);
    for (const auto& [db, tb] : right) {
      if (da + db > order_) continue;
      for (std::size_t i = 0; i < e.size(); ++i) e[i] = ea[i] + tb->first[i];
      out.add_term(e, ca * tb->second);
    }
  }
  terms_ = std::move(out.terms_);
  return *this;
}

GradedPoly& GradedPoly::operator*=(const Rational& s) {
  if (s == 0) {
    terms_.clear();
    return *this;
  }
  for (auto& [e, c] : terms_) c *= s;
  return *this;
}

GradedPoly GradedPoly::operator-() const {
  GradedPoly out = *this;
  for (auto& [e, c] : out.terms_) c = -c;
  return out;
}

GradedPoly GradedPoly::pow(int k) const {
  if (k < 0) throw std::invalid_argument("GradedPoly::pow: negative exponent");
  GradedPoly result = constant(table_, order_, Rational(1));
  GradedPoly base = *this;
  while (k > 0) {
    if (k & 1) result *= base;
    k >>= 1;
    if (k > 0) base *= base;
  }
  return result;
}

bool GradedPoly::operator==(const GradedPoly& rhs) const {
  return order_ == rhs.order_ && (table_ == rhs.table_ || *table_ == *rhs.table_) && terms_ == rhs.terms_;
}

std::vector<std::pair<Exponents, Rational>> GradedPoly::canonical_terms() const {
  std::vector<std::pair<Exponents, Rational>> out(terms_.begin(), terms_.end());
  std::stable_sort(out.begin(), out.end(), [this](const auto& a, const auto& b) {
    const int da = weighted_degree(a.first), db = weighted_degree(b.first);
    if (da != db) return da < db;
    return a.first > b.first;
  });
  return out;
}

namespace {

std::string monomial_string(const VariableTable& vars, const Exponents& e) {
  std::string s;
  for (std::size_t i = 0; i < e.size(); ++i) {
    if (e[i] == 0) continue;
    if (!s.empty()) s += '*';
    s += vars[i].name;
    if (e[i] > 1) s += '^' + std::to_string(e[i]);
  }
  return s;
}

template <class Integer>
nlohmann::json integer_json(const Integer& z) {
  if (z >= std::numeric_limits<long long>::min() && z <= std::numeric_limits<long long>::max())
    return z.template convert_to<long long>();
  return z.str();
}

}  // namespace

std::string GradedPoly::to_string() const {
  if (terms_.empty()) return "0";
  std::string s;
  bool first = true;
  for (const auto& [e, c] : canonical_terms()) {
    const std::string mono = monomial_string(*table_, e);
    Rational mag = c < 0 ? Rational(-c) : c;
    std::string term;
    if (mono.empty()) {
      term = mag.str();
    } else if (mag == 1) {
      term = mono;
    } else {
      term = mag.str() + "*" + mono;
    }
    if (first) {
      s = (c < 0 ? "-" : "") + term;
      first = false;
    } else {
      s += (c < 0 ? " - " : " + ") + term;
    }
  }
  return s;
}

nlohmann::json GradedPoly::to_json() const {
  nlohmann::json vars = nlohmann::json::array();
  for (const auto& v : table_->variables()) vars.push_back({{"name", v.name}, {"weight", v.weight}});
  nlohmann::json terms = nlohmann::json::object();
  for (const auto& [e, c] : canonical_terms()) {
    std::string key;
    for (std::size_t i = 0; i < e.size(); ++i) key += (i ? "," : "") + std::to_string(e[i]);
    terms[key] = {integer_json(numerator(c)), integer_json(denominator(c))};
  }
  return {{"variables", vars}, {"order", order_}, {"terms", terms}};
}

GradedPoly GradedPoly::from_json(const nlohmann::json& j) {
  std::vector<VariableTable::Variable> vars;
  for (const auto& v : j.at("variables")) vars.push_back({v.at("name").get<std::string>(), v.at("weight").get<int>()});
  GradedPoly p(make_table(std::move(vars)), j.at("order").get<int>());
  for (const auto& [key, frac] : j.at("terms").items()) {
    Exponents e;
    std::stringstream ss(key);
    std::string part;
    while (std::getline(ss, part, ',')) e.push_back(std::stoi(part));
    if (e.size() != p.table_->size()) throw std::invalid_argument("from_json: exponent length mismatch");
    auto as_string = [](const nlohmann::json& x) { return x.is_string() ? x.get<std::string>() : x.dump(); };
    p.add_term(e, Rational(as_string(frac.at(0))) / Rational(as_string(frac.at(1))));
  }
  return p;
}

// ---------------------------------------------------------------------------

GradedPoly compose(const GradedPoly& f, const SeriesMap& sub) {
  if (sub.images.size() != f.variables().size())
    throw std::invalid_argument("compose: substitution arity does not match source variables");
  if (sub.images.empty()) throw std::invalid_argument("compose: empty substitution");
  const GradedPoly& first = sub.images.front();
  const int order = first.order();
  std::vector<int> valuations;
  for (std::size_t i = 0; i < sub.images.size(); ++i) {
    const GradedPoly& img = sub.images[i];
    if (img.order() != order || !(*img.table() == *first.table()))
      throw std::invalid_argument("compose: images live in different rings");
    const int w = f.variables()[i].weight;
    if (!img.is_zero() && img.valuation() < w)
      throw std::invalid_argument("compose: image of '" + f.variables()[i].name + "' has valuation " +
                                  std::to_string(img.valuation()) + " below its weight " + std::to_string(w));
    valuations.push_back(img.is_zero() ? order + 1 : img.valuation());
  }
  if (f.order() < order)
    throw std::invalid_argument("compose: source known only to order " + std::to_string(f.order()) +
                                ", target needs " + std::to_string(order));

  std::vector<std::vector<GradedPoly>> powers(sub.images.size());
  auto power = [&](std::size_t i, int k) -> const GradedPoly& {
    auto& cache = powers[i];
    if (cache.empty()) cache.push_back(GradedPoly::constant(first.table(), order, Rational(1)));
    while (static_cast<int>(cache.size()) <= k) cache.push_back(cache.back() * sub.images[i]);
    return cache[k];
  };

  GradedPoly out(first.table(), order);
  for (const auto& [e, c] : f.terms()) {
    long lowest = 0;
    for (std::size_t i = 0; i < e.size(); ++i) lowest += static_cast<long>(e[i]) * valuations[i];
    if (lowest > order) continue;
    GradedPoly term = GradedPoly::constant(first.table(), order, c);
    for (std::size_t i = 0; i < e.size(); ++i) {
      if (e[i] > 0) term *= power(i, e[i]);
    }
    out += term;
  }
  return out;
}

SeriesMap identity_map(const TablePtr& table, int order) {
  SeriesMap m;
  for (const auto& v : table->variables()) m.images.push_back(GradedPoly::variable(table, order, v.name));
  return m;
}

GradedPoly std_series(StdSeries kind, int order, const Rational& exponent, const std::string& name) {
  if (order < 0) throw std::invalid_argument("std_series: negative order");
  GradedPoly p(make_table({{name, 1}}), order);
  Rational binom(1);  // (-1)^j C(exponent, j)
  for (int j = 0; j <= order; ++j) {
    switch (kind) {
      case StdSeries::log_one_minus:
        if (j > 0) p.add_term({j}, Rational(-1) / j);
        break;
      case StdSeries::pow_neg2:
        p.add_term({j}, Rational(j + 1));
        break;
      case StdSeries::binomial:
        p.add_term({j}, binom);
        binom *= -(exponent - j);
        binom /= (j + 1);
        break;
    }
  }
  return p;
}

// ---------------------------------------------------------------------------

TriangularSolveError::TriangularSolveError(Kind kind, int degree, std::vector<std::string> residual_monomials)
    : std::runtime_error([&] {
        std::string msg = std::string(kind == Kind::inconsistent ? "inconsistent" : "underdetermined") +
                          " system at weighted degree " + std::to_string(degree);
        if (!residual_monomials.empty()) {
          msg += ":";
          for (const auto& m : residual_monomials) msg += " [" + m + "]";
        }
        return msg;
      }()),
      kind_(kind),
      degree_(degree),
      monomials_(std::move(residual_monomials)) {}

std::vector<Rational> solve_triangular(std::span<const Unknown> unknowns, const ResidualFunction& residual) {
  std::vector<Rational> values(unknowns.size(), Rational(0));
  const std::vector<GradedPoly> probe = residual(values);
  int max_degree = 0;
  for (const auto& p : probe) max_degree = std::max(max_degree, p.order());
  for (const auto& u : unknowns) {
    if (u.degree > max_degree) throw std::invalid_argument("solve_triangular: unknown '" + u.name + "' above residual order");
  }

  using RowKey = std::pair<std::size_t, Exponents>;
  for (int d = 0; d <= max_degree; ++d) {
    std::vector<std::size_t> block;
    for (std::size_t j = 0; j < unknowns.size(); ++j) {
      if (unknowns[j].degree == d) block.push_back(j);
    }
    const std::vector<GradedPoly> base = residual(values);
    std::map<RowKey, std::size_t> rows;
    auto collect = [&](const std::vector<GradedPoly>& res) {
      for (std::size_t r = 0; r < res.size(); ++r) {
        const GradedPoly part = res[r].homogeneous_part(d);
        for (const auto& [e, c] : part.terms()) rows.try_emplace(RowKey{r, e}, rows.size());
      }
    };
    collect(base);
    std::vector<std::vector<GradedPoly>> columns;
    for (std::size_t j : block) {
      values[j] = 1;
      columns.push_back(residual(values));
      values[j] = 0;
      collect(columns.back());
    }
    auto describe = [&](const std::vector<GradedPoly>& res) {
      std::vector<std::string> out;
      for (std::size_t r = 0; r < res.size(); ++r) {
        const GradedPoly part = res[r].homogeneous_part(d);
        if (!part.is_zero()) out.push_back("residual " + std::to_string(r) + ": " + part.to_string());
      }
      return out;
    };
    if (rows.empty()) continue;
    if (block.empty()) {
      throw TriangularSolveError(TriangularSolveError::Kind::inconsistent, d, describe(base));
    }
    MatrixQ a = MatrixQ::Zero(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(block.size()));
    VectorQ rhs = VectorQ::Zero(static_cast<Eigen::Index>(rows.size()));
    for (const auto& [key, row] : rows) {
      const Rational b0 = base[key.first].coefficient(key.second);
      rhs(row) = -b0;
      for (std::size_t k = 0; k < block.size(); ++k) {
        a(row, k) = columns[k][key.first].coefficient(key.second) - b0;
      }
    }
    const ExactSolve sol = solve_exact(a, rhs);
    if (sol.status == ExactSolve::Status::inconsistent) {
      throw TriangularSolveError(TriangularSolveError::Kind::inconsistent, d, describe(base));
    }
    if (sol.status == ExactSolve::Status::underdetermined) {
      std::vector<std::string> names;
      for (std::size_t j : block) names.push_back(unknowns[j].name);
      throw TriangularSolveError(TriangularSolveError::Kind::underdetermined, d, names);
    }
    for (std::size_t k = 0; k < block.size(); ++k) values[block[k]] = sol.solution(k);
  }
  return values;
}

// ---------------------------------------------------------------------------

RationalPolynomial::RationalPolynomial(std::vector<Rational> coefficients) : coeffs_(std::move(coefficients)) {
  normalize();
}

void RationalPolynomial::normalize() {
  while (!coeffs_.empty() && coeffs_.back() == 0) coeffs_.pop_back();
}

Rational RationalPolynomial::coefficient(int k) const {
  return k >= 0 && k < static_cast<int>(coeffs_.size()) ? coeffs_[k] : Rational(0);
}

std::string RationalPolynomial::to_string(const std::string& var) const {
  if (coeffs_.empty()) return "0";
  std::string out;
  for (int k = 0; k <= degree(); ++k) {
    const Rational& c = coeffs_[static_cast<std::size_t>(k)];
    if (c == 0) continue;
    const Rational mag = c < 0 ? Rational(-c) : c;
    out += out.empty() ? (c < 0 ? "-" : "") : (c < 0 ? " - " : " + ");
    if (k == 0 || mag != 1) out += mag.str() + (k > 0 ? "*" : "");
    if (k >= 1) out += var;
    if (k >= 2) out += "^" + std::to_string(k);
  }
  return out;
}

Rational RationalPolynomial::operator()(const Rational& x) const {
  Rational acc(0);
  for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it) acc = acc * x + *it;
  return acc;
}

double RationalPolynomial::operator()(double x) const {
  double acc = 0.0;
  for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it) acc = acc * x + it->convert_to<double>();
  return acc;
}

RationalPolynomial RationalPolynomial::derivative() const {
  std::vector<Rational> d;
  for (std::size_t k = 1; k < coeffs_.size(); ++k) d.push_back(coeffs_[k] * static_cast<long>(k));
  return RationalPolynomial(std::move(d));
}

RationalPolynomial operator-(const RationalPolynomial& a, const RationalPolynomial& b) {
  std::vector<Rational> c(std::max(a.coeffs_.size(), b.coeffs_.size()), Rational(0));
  for (std::size_t k = 0; k < a.coeffs_.size(); ++k) c[k] += a.coeffs_[k];
  for (std::size_t k = 0; k < b.coeffs_.size(); ++k) c[k] -= b.coeffs_[k];
  return RationalPolynomial(std::move(c));
}

RationalPolynomial operator*(const RationalPolynomial& a, const RationalPolynomial& b) {
  if (a.is_zero() || b.is_zero()) return {};
  std::vector<Rational> c(a.coeffs_.size() + b.coeffs_.size() - 1, Rational(0));
  for (std::size_t i = 0; i < a.coeffs_.size(); ++i) {
    for (std::size_t j = 0; j < b.coeffs_.size(); ++j) c[i + j] += a.coeffs_[i] * b.coeffs_[j];
  }
  return RationalPolynomial(std::move(c));
}

std::pair<RationalPolynomial, RationalPolynomial> RationalPolynomial::divmod(const RationalPolynomial& a,
                                                                            const RationalPolynomial& b) {
  if (b.is_zero()) throw std::domain_error("polynomial division by zero");
  std::vector<Rational> rem = a.coeffs_;
  std::vector<Rational> quo(std::max<int>(a.degree() - b.degree() + 1, 0), Rational(0));
  const Rational lead = b.coeffs_.back();
  for (int k = a.degree() - b.degree(); k >= 0; --k) {
    const Rational f = rem[k + b.degree()] / lead;
    quo[k] = f;
    if (f == 0) continue;
    for (int j = 0; j <= b.degree(); ++j) rem[k + j] -= f * b.coeffs_[j];
  }
  return {RationalPolynomial(std::move(quo)), RationalPolynomial(std::move(rem))};
}

RationalPolynomial RationalPolynomial::gcd(RationalPolynomial a, RationalPolynomial b) {
  while (!b.is_zero()) {
    auto r = divmod(a, b).second;
    a = std::move(b);
    b = std::move(r);
  }
  if (a.is_zero()) return a;
  const Rational lead = a.coeffs_.back();
  for (auto& c : a.coeffs_) c /= lead;
  return a;
}

RationalPolynomial RationalPolynomial::squarefree() const {
  if (degree() < 1) return *this;
  const RationalPolynomial g = gcd(*this, derivative());
  return divmod(*this, g).first;
}

int RationalPolynomial::count_real_roots(const Rational& lo, const Rational& hi) const {
  if (is_zero()) throw std::domain_error("count_real_roots: zero polynomial");
  std::vector<RationalPolynomial> chain{squarefree()};
  chain.push_back(chain.front().derivative());
  while (!chain.back().is_zero()) {
    auto r = divmod(chain[chain.size() - 2], chain.back()).second;
    chain.push_back(RationalPolynomial() - r);
  }
  chain.pop_back();
  auto sign_changes = [&](const Rational& x) {
    int changes = 0, last = 0;
    for (const auto& p : chain) {
      const Rational v = p(x);
      const int s = v > 0 ? 1 : (v < 0 ? -1 : 0);
      if (s == 0) continue;
      if (last != 0 && s != last) ++changes;
      last = s;
    }
    return changes;
  };
  return sign_changes(lo) - sign_changes(hi);
}

RationalPolynomial RationalPolynomial::interpolate(std::span<const Rational> xs, std::span<const Rational> ys) {
  if (xs.size() != ys.size() || xs.empty()) throw std::invalid_argument("interpolate: bad sample sets");
  const std::size_t n = xs.size();
  std::vector<Rational> dd(ys.begin(), ys.end());
  for (std::size_t level = 1; level < n; ++level) {
    for (std::size_t i = n - 1; i >= level; --i) {
      const Rational dx = xs[i] - xs[i - level];
      if (dx == 0) throw std::invalid_argument("interpolate: repeated abscissa");
      dd[i] = (dd[i] - dd[i - 1]) / dx;
    }
  }
  // Horner expansion of the Newton form.
  RationalPolynomial acc(std::vector<Rational>{dd[n - 1]});
  for (std::size_t i = n - 1; i-- > 0;) {
    acc = acc * RationalPolynomial(std::vector<Rational>{-xs[i], Rational(1)});
    std::vector<Rational> c = acc.coeffs_;
    if (c.empty()) c.push_back(Rational(0));
    c[0] += dd[i];
    acc = RationalPolynomial(std::move(c));
  }
  return acc;
}

}  // namespace thermokam
