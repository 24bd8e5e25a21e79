#include "psipi/fock_dense.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace psipi::fock {

DenseFockBasis::DenseFockBasis(std::vector<ModeId> modes, int max_photons, Statistics statistics)
    : modes_(std::move(modes)), max_photons_(max_photons), statistics_(statistics) {
  std::sort(modes_.begin(), modes_.end());
  modes_.erase(std::unique(modes_.begin(), modes_.end()), modes_.end());
  if (max_photons_ < 0) throw InvalidArgument("DenseFockBasis: max_photons must be >= 0");

  const int cap = statistics_ == Statistics::fermion ? 1 : max_photons_;
  std::vector<int> counts(modes_.size(), 0);
  // Odometer over occupation vectors with the total-photon bound.
  auto emit = [&] {
    std::vector<std::pair<ModeId, int>> occ;
    for (std::size_t i = 0; i < modes_.size(); ++i)
      if (counts[i] > 0) occ.emplace_back(modes_[i], counts[i]);
    index_.emplace(counts, kets_.size());
    kets_.emplace_back(std::move(occ));
    counts_.push_back(counts);
  };
  emit();
  while (true) {
    std::size_t pos = 0;
    int total = 0;
    for (int c : counts) total += c;
    while (pos < counts.size()) {
      if (counts[pos] < cap && total < max_photons_) {
        ++counts[pos];
        break;
      }
      total -= counts[pos];
      counts[pos] = 0;
      ++pos;
    }
    if (pos == counts.size()) break;
    emit();
  }
}

DenseFockBasis DenseFockBasis::covering(const std::vector<TaggedState>& states,
                                        const std::vector<ModeId>& extra_modes, int max_photons) {
  if (states.empty()) throw InvalidArgument("DenseFockBasis::covering: no states");
  std::set<ModeId> modes(extra_modes.begin(), extra_modes.end());
  for (const auto& state : states) {
    if (state.statistics() != states.front().statistics())
      throw InvalidArgument("DenseFockBasis::covering: statistics mismatch");
    for (const auto& [key, amp] : state.terms())
      for (const auto& [mode, n] : key.ket.occupations()) modes.insert(mode);
  }
  return DenseFockBasis({modes.begin(), modes.end()}, max_photons, states.front().statistics());
}

std::size_t DenseFockBasis::mode_position(const ModeId& mode) const {
  auto it = std::lower_bound(modes_.begin(), modes_.end(), mode);
  if (it == modes_.end() || !(*it == mode))
    throw InvalidArgument("mode " + to_string(mode) + " is not part of the basis");
  return static_cast<std::size_t>(it - modes_.begin());
}

SparseOperator DenseFockBasis::creation(const ModeId& mode) const {
  const std::size_t pos = mode_position(mode);
  std::vector<Eigen::Triplet<complex>> entries;
  for (std::size_t col = 0; col < counts_.size(); ++col) {
    std::vector<int> target = counts_[col];
    const int n = target[pos];
    ++target[pos];
    auto it = index_.find(target);
    if (it == index_.end()) continue;
    double coeff = 0;
    if (statistics_ == Statistics::boson) {
      coeff = std::sqrt(n + 1.0);
    } else {
      // Jordan-Wigner string over modes preceding `mode`.
      int parity = 0;
      for (std::size_t k = 0; k < pos; ++k) parity += counts_[col][k];
      coeff = (parity % 2 == 0) ? 1.0 : -1.0;
    }
    entries.emplace_back(static_cast<int>(it->second), static_cast<int>(col), coeff);
  }
  const auto dim = static_cast<Eigen::Index>(dimension());
  SparseOperator op(dim, dim);
  op.setFromTriplets(entries.begin(), entries.end());
  return op;
}

SparseOperator DenseFockBasis::annihilation(const ModeId& mode) const {
  SparseOperator create = creation(mode);
  return SparseOperator(create.adjoint());
}

DenseVector DenseFockBasis::to_vector(const TaggedState& state) const {
  if (state.statistics() != statistics_) throw InvalidArgument("to_vector: statistics mismatch");
  DenseVector vec = DenseVector::Zero(static_cast<Eigen::Index>(dimension()));
  for (const auto& [key, amp] : state.terms()) {
    std::vector<int> counts(modes_.size(), 0);
    for (const auto& [mode, n] : key.ket.occupations()) counts[mode_position(mode)] = n;
    auto it = index_.find(counts);
    if (it == index_.end())
      throw InvalidArgument("ket " + to_string(key.ket) + " exceeds the truncated basis");
    vec[static_cast<Eigen::Index>(it->second)] += amp;
  }
  return vec;
}

TaggedState DenseFockBasis::from_vector(const DenseVector& vec) const {
  TaggedState state(statistics_);
  for (Eigen::Index i = 0; i < vec.size(); ++i)
    if (std::abs(vec[i]) >= kPruneThreshold) state.add_term(kets_[static_cast<std::size_t>(i)], 0, vec[i]);
  return state;
}

}  // namespace psipi::fock
