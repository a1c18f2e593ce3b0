#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include <json.hpp>

#include "bespoke/cell_library.hpp"
#include "bespoke/netlist.hpp"
#include "bespoke/sim.hpp"

namespace bespoke
{

/*! \brief phi of gates that must never be pruned (decision subcircuit). */
inline constexpr int phi_never = std::numeric_limits<int>::max();

struct gate_tau
{
  gate_id gate{ 0 };
  double tau{ 0.5 };
  bool const_value{ false };
};

/*! \brief Per gate (in netlist order): tau = max(p1, 1 - p1) of its output and
 *  the majority value; an exact half takes 0. */
std::vector<gate_tau> compute_tau( activity_profile const& a, netlist const& n );

/*! \brief Per gate (in netlist order): the most significant tracked bit reachable
 *  from its output, -1 if none.
 *
 * Regressors and generic circuits track their primary outputs; classifiers
 * track the argmax-input buses and report phi_never for decision gates.
 */
std::vector<int> compute_phi( netlist const& n );

struct prune_candidate
{
  gate_id gate{ 0 };
  double tau{ 0.5 };
  bool const_value{ false };
  int phi{ -1 };
};

std::vector<prune_candidate> prune_candidates( netlist const& n, activity_profile const& a );

/*! \brief Whether a candidate meets tau >= tau_c and phi <= phi_c (never for phi_never). */
bool qualifies( prune_candidate const& c, double tau_c, int phi_c );

/*! \brief Ids of the qualifying gates, ascending. */
std::vector<gate_id> select_pruned( std::span<prune_candidate const> cands, double tau_c, int phi_c );

/*! \brief Ties every qualifying gate to its constant and re-optimizes. The
 *  thresholds and removed ids are recorded under meta["prune"]. */
netlist prune( netlist const& n, std::span<prune_candidate const> cands, double tau_c, int phi_c,
               cell_library const& lib );

nlohmann::json to_json( std::span<prune_candidate const> cands );

} // namespace bespoke
