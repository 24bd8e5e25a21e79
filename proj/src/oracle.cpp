#include "psipi/oracle.hpp"

#include <cmath>

#include "psipi/interferometer.hpp"
#include "psipi/spdc.hpp"

namespace psipi::oracle {

using imaging::PortPair;

double multimode_direct_sum(const Table& c2, const std::vector<double>& alpha, std::size_t p, std::size_t q,
                            PortPair ports) {
  const std::size_t n = c2.size();
  auto c4 = [&](std::size_t s, std::size_t sp, std::size_t i, std::size_t ip) {
    return spdc::c4_from_c2(c2[s][i], c2[sp][ip]);
  };
  double single = 0.0;
  double joint_weight = 0.0;
  double joint = 0.0;
  const double sign = ports == PortPair::b_bprime ? -1.0 : 1.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t ip = 0; ip < n; ++ip) {
      single += std::norm(c4(p, q, i, ip) + c4(p, q, ip, i) + c4(q, p, i, ip) + c4(q, p, ip, i));
      const double p12 = std::norm(c2[p][i] * c2[q][ip] + sign * c2[p][ip] * c2[q][i]);
      joint_weight += 2.0 * p12;
      joint += 2.0 * p12 * (1.0 + sign * std::cos(alpha[i] - alpha[ip]));
    }
  // Both crystals contribute the same single-crystal term.
  return (2.0 * single + joint) / (2.0 * single + joint_weight);
}

double multimode_fock_raw(const Table& c2, const std::vector<double>& alpha, std::size_t p, std::size_t q,
                          PortPair ports, fock::Statistics statistics, const std::vector<double>& signal_phase) {
  const std::size_t n = c2.size();
  spdc::SourceSpec src1{1, 1.0, 0, {}};
  spdc::SourceSpec src2{2, 1.0, 1, {}};
  for (std::size_t s = 0; s < n; ++s)
    for (std::size_t i = 0; i < n; ++i) {
      if (c2[s][i] == complex{}) continue;
      const int si = static_cast<int>(s);
      const int ii = static_cast<int>(i);
      src1.mode_pairs.push_back({fock::signal(1, si), fock::idler(1, ii), c2[s][i]});
      src2.mode_pairs.push_back({fock::signal(2, si), fock::idler(2, ii), c2[s][i]});
    }
  auto state = spdc::build_two_source_state(src1, src2, statistics);
  state = fock::truncate_photon_number(state, 4);
  // A two-signal coincidence needs a four-photon term.
  fock::TaggedState four(statistics);
  for (const auto& [key, amp] : state.terms())
    if (key.ket.total() == 4) four.add_term(key.ket, key.pump_exponent, amp);

  spdc::PathIdentityMap identity;
  for (std::size_t i = 0; i < n; ++i) {
    const int ii = static_cast<int>(i);
    identity.map.emplace(fock::idler(2, ii), spdc::PathIdentityMap::Target{fock::idler(1, ii), alpha[i]});
  }
  four = spdc::apply_path_identity(four, identity);

  auto phase = [&](std::size_t k) { return signal_phase.empty() ? 0.0 : signal_phase[k]; };
  using interferometer::Port;
  const Port port_p = ports == PortPair::bprime_bprime ? Port::b_prime : Port::b;
  const Port port_q = ports == PortPair::bb ? Port::b : Port::b_prime;
  const auto op_p = interferometer::beamsplitter_output(port_p, fock::signal(1, static_cast<int>(p)),
                                                        fock::signal(2, static_cast<int>(p)), phase(p));
  const auto op_q = interferometer::beamsplitter_output(port_q, fock::signal(1, static_cast<int>(q)),
                                                        fock::signal(2, static_cast<int>(q)), phase(q));
  return interferometer::coincidence_rate(four, op_p, op_q).raw;
}

double multimode_fock_normalized(const Table& c2, const std::vector<double>& alpha, std::size_t p, std::size_t q) {
  const std::vector<double> flat(alpha.size(), 0.0);
  return 1.5 * multimode_fock_raw(c2, alpha, p, q, PortPair::bb) /
         multimode_fock_raw(c2, flat, p, q, PortPair::bb);
}

}  // namespace psipi::oracle
