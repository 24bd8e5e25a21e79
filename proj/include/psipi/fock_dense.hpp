#pragma once

#include <map>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "psipi/fock.hpp"

namespace psipi::fock {

using SparseOperator = Eigen::SparseMatrix<complex>;
using DenseVector = Eigen::VectorXcd;

/// Explicit matrix representation on the truncated Fock space spanned by a
/// fixed list of modes with at most `max_photons` particles in total.
class DenseFockBasis {
 public:
  DenseFockBasis(std::vector<ModeId> modes, int max_photons, Statistics statistics);

  /// Basis over every mode appearing in the given states (plus `extra_modes`).
  static DenseFockBasis covering(const std::vector<TaggedState>& states,
                                 const std::vector<ModeId>& extra_modes, int max_photons);

  std::size_t dimension() const { return kets_.size(); }
  const std::vector<ModeId>& modes() const { return modes_; }
  const OccupationKet& ket(std::size_t index) const { return kets_[index]; }
  Statistics statistics() const { return statistics_; }

  /// Creation operator matrix; components leaving the truncated space are dropped.
  SparseOperator creation(const ModeId& mode) const;
  SparseOperator annihilation(const ModeId& mode) const;

  /// Coefficient vector of a state. Pump exponents are ignored (amplitudes of
  /// equal kets with different exponents are summed), so pass states from a
  /// single emission class.
  DenseVector to_vector(const TaggedState& state) const;
  TaggedState from_vector(const DenseVector& vec) const;

 private:
  std::size_t mode_position(const ModeId& mode) const;

  std::vector<ModeId> modes_;
  int max_photons_;
  Statistics statistics_;
  std::vector<OccupationKet> kets_;
  std::vector<std::vector<int>> counts_;
  std::map<std::vector<int>, std::size_t> index_;
};

}  // namespace psipi::fock
