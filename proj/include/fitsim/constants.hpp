#pragma once

namespace fitsim {

inline constexpr double kEps0 = 8.8541878128e-12;  // F/m
inline constexpr double kMu0 = 1.25663706212e-6;   // H/m
inline constexpr double kC0 = 2.99792458e8;        // m/s
inline constexpr double kPi = 3.14159265358979323846;

}  // namespace fitsim
