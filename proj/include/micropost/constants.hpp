#ifndef MICROPOST_CONSTANTS_HPP
#define MICROPOST_CONSTANTS_HPP

namespace micropost {

inline constexpr double pi = 3.14159265358979323846;
inline constexpr double c0 = 299792458.0;            // m/s
inline constexpr double mu0 = 4.0e-7 * pi;           // H/m
inline constexpr double eps0 = 1.0 / (mu0 * c0 * c0);
inline constexpr double eta0 = mu0 * c0;             // free-space impedance
inline constexpr double hbar = 1.054571817e-34;      // J s

}  // namespace micropost

#endif
