#pragma once

// Hartree atomic units throughout: hbar = e = m_e = 1, energies in Ha,
// lengths in bohr, inverse temperature in 1/Ha.

namespace pimol::units {

inline constexpr double hartree_in_kelvin = 315775.02;
inline constexpr double hartree_in_wavenumber = 219474.63;  // cm^-1
inline constexpr double proton_mass = 1836.152672;          // electron masses

inline constexpr double pi = 3.14159265358979323846;

/// Converts a rotational/vibrational constant in cm^-1 to hartree.
constexpr double wavenumber_to_hartree(double cm_inverse) { return cm_inverse / hartree_in_wavenumber; }

}  // namespace pimol::units
