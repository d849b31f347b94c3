#pragma once

#include <boost/multiprecision/eigen.hpp>
#include <boost/multiprecision/gmp.hpp>

#include <string>
#include <type_traits>

namespace thermokam {

/// Exact rational with arbitrary-precision numerator and denominator.
/// Expression templates are disabled so values compose cleanly with Eigen
/// and with `auto`.
using Rational = boost::multiprecision::number<boost::multiprecision::gmp_rational,
                                               boost::multiprecision::et_off>;

/// Parses "p/q", "p" or a decimal such as "0.25" into an exact rational.
Rational parse_rational(const std::string& text);

inline std::string to_string(const Rational& q) { return q.str(); }

/// Converts an exact rational into the scalar type of a computation.
template <class Scalar>
Scalar to_scalar(const Rational& q) {
  if constexpr (std::is_same_v<Scalar, Rational>) {
    return q;
  } else if constexpr (std::is_floating_point_v<Scalar>) {
    return q.template convert_to<Scalar>();
  } else {
    return Scalar(numerator(q).str()) / Scalar(denominator(q).str());
  }
}

}  // namespace thermokam
