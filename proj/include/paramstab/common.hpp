#pragma once

#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

namespace paramstab {

using cd = std::complex<double>;
using Vector = std::vector<cd>;

// Base class for all library errors.  Subclasses carry the failure mode in
// the type so callers can branch without string matching.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

inline constexpr double kPi = 3.141592653589793238462643383279502884;

}  // namespace paramstab
