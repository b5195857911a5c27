#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace circle_forms {

enum class errc {
  not_symmetric,
  odd_diagonal,
  singular,
  dimension_mismatch,
  even_modulus,
  order_too_small,
  quadrature_failure,
  closed_form_inapplicable,
  too_large,
  precondition_violated,
  not_odd_prime,
  bad_plateau,
  dimension_too_high,
  non_integrable,
  non_convergent,
  not_positive_definite,
  box_too_large,
  divergent,
  too_slow,
  insufficient_data,
  overflow,
};

constexpr std::string_view errc_name(errc c) noexcept {
  switch (c) {
    case errc::not_symmetric: return "NotSymmetric";
    case errc::odd_diagonal: return "OddDiagonal";
    case errc::singular: return "Singular";
    case errc::dimension_mismatch: return "DimensionMismatch";
    case errc::even_modulus: return "EvenModulus";
    case errc::order_too_small: return "OrderTooSmall";
    case errc::quadrature_failure: return "QuadratureFailure";
    case errc::closed_form_inapplicable: return "ClosedFormInapplicable";
    case errc::too_large: return "TooLarge";
    case errc::precondition_violated: return "PreconditionViolated";
    case errc::not_odd_prime: return "NotOddPrime";
    case errc::bad_plateau: return "BadPlateau";
    case errc::dimension_too_high: return "DimensionTooHigh";
    case errc::non_integrable: return "NonIntegrable";
    case errc::non_convergent: return "NonConvergent";
    case errc::not_positive_definite: return "NotPositiveDefinite";
    case errc::box_too_large: return "BoxTooLarge";
    case errc::divergent: return "Divergent";
    case errc::too_slow: return "TooSlow";
    case errc::insufficient_data: return "InsufficientData";
    case errc::overflow: return "Overflow";
  }
  return "Unknown";
}

// every library failure is one of these; the code is the machine-readable part
class error : public std::runtime_error {
 public:
  error(errc c, const std::string& what) : std::runtime_error(what), code_(c) {}
  errc code() const noexcept { return code_; }
  std::string_view name() const noexcept { return errc_name(code_); }

 private:
  errc code_;
};

[[noreturn]] inline void fail(errc c, const std::string& what) { throw error(c, what); }

inline void require(bool ok, errc c, const std::string& what) {
  if (!ok) fail(c, what);
}

}  // namespace circle_forms
