#include "psipi/fock.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace psipi::fock {

std::strong_ordering operator<=>(const ModeId& a, const ModeId& b) {
  if (auto c = a.species <=> b.species; c != 0) return c;
  if (auto c = a.source <=> b.source; c != 0) return c;
  if (auto c = a.label.index() <=> b.label.index(); c != 0) return c;
  if (a.label.index() == 0) return std::get<int>(a.label) <=> std::get<int>(b.label);
  return std::get<std::string>(a.label).compare(std::get<std::string>(b.label)) <=> 0;
}

ModeId signal(int source, std::string label) { return {Species::signal, source, std::move(label)}; }
ModeId signal(int source, int index) { return {Species::signal, source, index}; }
ModeId idler(int source, std::string label) { return {Species::idler, source, std::move(label)}; }
ModeId idler(int source, int index) { return {Species::idler, source, index}; }

std::string to_string(const ModeId& mode) {
  std::ostringstream os;
  os << (mode.species == Species::signal ? 'S' : 'I') << mode.source << '(';
  if (mode.label.index() == 0)
    os << std::get<int>(mode.label);
  else
    os << std::get<std::string>(mode.label);
  os << ')';
  return os.str();
}

OccupationKet::OccupationKet(std::vector<std::pair<ModeId, int>> occupations) {
  std::sort(occupations.begin(), occupations.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  for (auto& [mode, n] : occupations) {
    if (n < 0) throw InvalidArgument("negative occupation for mode " + to_string(mode));
    if (n == 0) continue;
    if (!occupations_.empty() && occupations_.back().first == mode)
      occupations_.back().second += n;
    else
      occupations_.emplace_back(mode, n);
  }
}

int OccupationKet::count(const ModeId& mode) const {
  auto it = std::lower_bound(occupations_.begin(), occupations_.end(), mode,
                             [](const auto& entry, const ModeId& m) { return entry.first < m; });
  return (it != occupations_.end() && it->first == mode) ? it->second : 0;
}

int OccupationKet::total() const {
  int n = 0;
  for (const auto& [mode, count] : occupations_) n += count;
  return n;
}

int OccupationKet::occupied_before(const ModeId& mode) const {
  auto it = std::lower_bound(occupations_.begin(), occupations_.end(), mode,
                             [](const auto& entry, const ModeId& m) { return entry.first < m; });
  return static_cast<int>(it - occupations_.begin());
}

OccupationKet OccupationKet::with_count(const ModeId& mode, int n) const {
  if (n < 0) throw InvalidArgument("negative occupation for mode " + to_string(mode));
  OccupationKet out;
  out.occupations_.reserve(occupations_.size() + 1);
  bool placed = false;
  for (const auto& entry : occupations_) {
    if (!placed && !(entry.first < mode)) {
      placed = true;
      if (n > 0) out.occupations_.emplace_back(mode, n);
      if (entry.first == mode) continue;
    }
    out.occupations_.push_back(entry);
  }
  if (!placed && n > 0) out.occupations_.emplace_back(mode, n);
  return out;
}

std::string to_string(const OccupationKet& ket) {
  if (ket.empty()) return "|vac>";
  std::ostringstream os;
  os << '|';
  bool first = true;
  for (const auto& [mode, n] : ket.occupations()) {
    if (!first) os << ',';
    first = false;
    if (n != 1) os << n;
    os << to_string(mode);
  }
  os << '>';
  return os.str();
}

TaggedState TaggedState::vacuum(Statistics statistics) {
  return single_term(OccupationKet{}, 1.0, 0, statistics);
}

TaggedState TaggedState::single_term(const OccupationKet& ket, complex amplitude, int pump_exponent,
                                     Statistics statistics) {
  if (statistics == Statistics::fermion) {
    for (const auto& [mode, n] : ket.occupations())
      if (n > 1) throw InvalidArgument("fermionic ket with occupation > 1: " + to_string(ket));
  }
  TaggedState state(statistics);
  state.add_term(ket, pump_exponent, amplitude);
  return state;
}

void TaggedState::add_term(const OccupationKet& ket, int pump_exponent, complex amplitude) {
  if (!std::isfinite(amplitude.real()) || !std::isfinite(amplitude.imag()))
    throw InvalidArgument("non-finite amplitude for " + to_string(ket));
  TermKey key{ket, pump_exponent};
  auto [it, inserted] = terms_.try_emplace(std::move(key), amplitude);
  if (!inserted) it->second += amplitude;
  if (std::abs(it->second) < kPruneThreshold) terms_.erase(it);
}

complex TaggedState::amplitude(const OccupationKet& ket, int pump_exponent) const {
  auto it = terms_.find(TermKey{ket, pump_exponent});
  return it == terms_.end() ? complex{} : it->second;
}

namespace {

TaggedState empty_like(const TaggedState& state) {
  TaggedState out(state.statistics());
  if (state.path_identity_applied()) out.mark_path_identity_applied();
  return out;
}

}  // namespace

TaggedState apply_creation(const TaggedState& state, const ModeId& mode) {
  TaggedState out = empty_like(state);
  for (const auto& [key, amp] : state.terms()) {
    const int n = key.ket.count(mode);
    complex factor;
    if (state.statistics() == Statistics::boson) {
      factor = std::sqrt(static_cast<double>(n + 1));
    } else {
      if (n == 1) continue;
      factor = (key.ket.occupied_before(mode) % 2 == 0) ? 1.0 : -1.0;
    }
    out.add_term(key.ket.with_count(mode, n + 1), key.pump_exponent, factor * amp);
  }
  return out;
}

TaggedState apply_annihilation(const TaggedState& state, const ModeId& mode) {
  TaggedState out = empty_like(state);
  for (const auto& [key, amp] : state.terms()) {
    const int n = key.ket.count(mode);
    if (n == 0) continue;
    complex factor;
    if (state.statistics() == Statistics::boson)
      factor = std::sqrt(static_cast<double>(n));
    else
      factor = (key.ket.occupied_before(mode) % 2 == 0) ? 1.0 : -1.0;
    out.add_term(key.ket.with_count(mode, n - 1), key.pump_exponent, factor * amp);
  }
  return out;
}

complex averaged_pairing(const TaggedState& bra, const TaggedState& ket) {
  if (bra.statistics() != ket.statistics())
    throw InvalidArgument("averaged_pairing: statistics mismatch");
  // Both maps are ordered by (ket, exponent), so equal keys line up in a merge.
  complex sum{};
  auto a = bra.terms().begin();
  auto b = ket.terms().begin();
  while (a != bra.terms().end() && b != ket.terms().end()) {
    if (a->first < b->first) {
      ++a;
    } else if (b->first < a->first) {
      ++b;
    } else {
      sum += std::conj(a->second) * b->second;
      ++a;
      ++b;
    }
  }
  return sum;
}

double norm(const TaggedState& state) {
  return std::sqrt(std::max(0.0, averaged_pairing(state, state).real()));
}

TaggedState scale(const TaggedState& state, complex factor) {
  TaggedState out = empty_like(state);
  for (const auto& [key, amp] : state.terms()) out.add_term(key.ket, key.pump_exponent, factor * amp);
  return out;
}

TaggedState add(const TaggedState& a, const TaggedState& b) {
  if (a.statistics() != b.statistics()) throw InvalidArgument("add: statistics mismatch");
  TaggedState out = a;
  for (const auto& [key, amp] : b.terms()) out.add_term(key.ket, key.pump_exponent, amp);
  if (b.path_identity_applied()) out.mark_path_identity_applied();
  return out;
}

TaggedState evaluate_at_phase(const TaggedState& state, double theta) {
  TaggedState out = empty_like(state);
  for (const auto& [key, amp] : state.terms())
    out.add_term(key.ket, 0, amp * std::polar(1.0, key.pump_exponent * theta));
  return out;
}

std::map<int, TaggedState> split_by_pump_exponent(const TaggedState& state) {
  std::map<int, TaggedState> groups;
  for (const auto& [key, amp] : state.terms()) {
    auto [it, inserted] = groups.try_emplace(key.pump_exponent, empty_like(state));
    it->second.add_term(key.ket, 0, amp);
  }
  return groups;
}

TaggedState truncate_photon_number(const TaggedState& state, int max_photons) {
  TaggedState out = empty_like(state);
  for (const auto& [key, amp] : state.terms())
    if (key.ket.total() <= max_photons) out.add_term(key.ket, key.pump_exponent, amp);
  return out;
}

}  // namespace psipi::fock
