#include "fbsde_ns/rng.hpp"

#include <boost/math/special_functions/erf.hpp>
#include <numbers>

namespace fbsde {

double inverse_normal_cdf(double u) {
    return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * u);
}

} // namespace fbsde
