#pragma once

#include <complex>
#include <compare>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "psipi/error.hpp"

/// Multimode second-quantized state algebra.
///
/// States are sparse superpositions of occupation-number kets. Every amplitude
/// carries an integer pump-phase exponent m, standing for a factor e^{i m T}
/// where T is the random phase difference between two mutually incoherent
/// pumps. Averaging over T is done exactly by contracting only terms with
/// equal exponents.
namespace psipi::fock {

using complex = std::complex<double>;

enum class Species : std::uint8_t { signal = 0, idler = 1 };
enum class Statistics : std::uint8_t { boson, fermion };

/// Path tag ("u", "c'") or integer momentum index.
using ModeLabel = std::variant<int, std::string>;

struct ModeId {
  Species species{Species::signal};
  int source{1};
  ModeLabel label{0};

  friend bool operator==(const ModeId&, const ModeId&) = default;
  friend std::strong_ordering operator<=>(const ModeId& a, const ModeId& b);
};

ModeId signal(int source, std::string label);
ModeId signal(int source, int index);
ModeId idler(int source, std::string label);
ModeId idler(int source, int index);

std::string to_string(const ModeId& mode);

/// Occupation numbers keyed by mode, kept sorted in canonical mode order.
/// Zero counts are never stored.
class OccupationKet {
 public:
  OccupationKet() = default;
  explicit OccupationKet(std::vector<std::pair<ModeId, int>> occupations);

  int count(const ModeId& mode) const;
  int total() const;
  /// Number of occupied modes strictly before `mode` in canonical order.
  int occupied_before(const ModeId& mode) const;
  OccupationKet with_count(const ModeId& mode, int n) const;
  bool empty() const { return occupations_.empty(); }

  const std::vector<std::pair<ModeId, int>>& occupations() const { return occupations_; }

  friend bool operator==(const OccupationKet&, const OccupationKet&) = default;
  friend auto operator<=>(const OccupationKet& a, const OccupationKet& b) {
    return a.occupations_ <=> b.occupations_;
  }

 private:
  std::vector<std::pair<ModeId, int>> occupations_;
};

std::string to_string(const OccupationKet& ket);

struct TermKey {
  OccupationKet ket;
  int pump_exponent{0};

  friend bool operator==(const TermKey&, const TermKey&) = default;
  friend auto operator<=>(const TermKey&, const TermKey&) = default;
};

/// Amplitudes with magnitude below this are dropped after each linear operation.
inline constexpr double kPruneThreshold = 1e-15;

class TaggedState {
 public:
  explicit TaggedState(Statistics statistics = Statistics::boson) : statistics_(statistics) {}

  static TaggedState vacuum(Statistics statistics = Statistics::boson);
  static TaggedState single_term(const OccupationKet& ket, complex amplitude, int pump_exponent = 0,
                                 Statistics statistics = Statistics::boson);

  /// Accumulates `amplitude` onto (ket, exponent); prunes the term if it cancels.
  void add_term(const OccupationKet& ket, int pump_exponent, complex amplitude);
  complex amplitude(const OccupationKet& ket, int pump_exponent = 0) const;

  Statistics statistics() const { return statistics_; }
  const std::map<TermKey, complex>& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }
  std::size_t size() const { return terms_.size(); }

  bool path_identity_applied() const { return path_identity_applied_; }
  void mark_path_identity_applied() { path_identity_applied_ = true; }

 private:
  Statistics statistics_;
  std::map<TermKey, complex> terms_;
  bool path_identity_applied_{false};
};

TaggedState apply_creation(const TaggedState& state, const ModeId& mode);
TaggedState apply_annihilation(const TaggedState& state, const ModeId& mode);

/// Sum of conj(bra) * ket over term pairs with equal kets and equal pump
/// exponents. This is the exact average over a uniformly distributed pump
/// phase difference. Throws on statistics mismatch.
complex averaged_pairing(const TaggedState& bra, const TaggedState& ket);

double norm(const TaggedState& state);
TaggedState scale(const TaggedState& state, complex factor);
TaggedState add(const TaggedState& a, const TaggedState& b);

/// Substitutes a fixed pump phase: every amplitude is multiplied by
/// e^{i m theta} and all exponents become 0.
TaggedState evaluate_at_phase(const TaggedState& state, double theta);

/// Groups terms by pump exponent (one group per independent emission class);
/// the returned states carry exponent 0.
std::map<int, TaggedState> split_by_pump_exponent(const TaggedState& state);

/// Drops every term whose total photon number exceeds `max_photons`.
TaggedState truncate_photon_number(const TaggedState& state, int max_photons);

}  // namespace psipi::fock
