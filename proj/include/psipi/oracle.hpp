#pragma once

#include <vector>

#include "psipi/fock.hpp"
#include "psipi/imaging.hpp"

/// Slow reference evaluations used by `verify` and the test suites.
namespace psipi::oracle {

using fock::complex;
using Table = std::vector<std::vector<complex>>;

/// Normalized multimode rate from the explicit four-photon sums: single-crystal
/// terms built from C4 = C2 C2 / 2 plus the joint-emission term weighted by
/// 1 +- cos(alpha_i - alpha_i'). Flat signal phase.
double multimode_direct_sum(const Table& c2, const std::vector<double>& alpha, std::size_t p, std::size_t q,
                            imaging::PortPair ports);

/// Unnormalized ||E_b(q) E_b(p) psi||^2 from the full Fock state of two
/// multimode sources with path identity on every idler mode.
double multimode_fock_raw(const Table& c2, const std::vector<double>& alpha, std::size_t p, std::size_t q,
                          imaging::PortPair ports, fock::Statistics statistics = fock::Statistics::boson,
                          const std::vector<double>& signal_phase = {});

/// multimode_fock_raw for (b,b) normalized by its alpha = 0 value, which is
/// 3/2 of the background.
double multimode_fock_normalized(const Table& c2, const std::vector<double>& alpha, std::size_t p, std::size_t q);

}  // namespace psipi::oracle
