#include "bespoke/prune.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "bespoke/error.hpp"
#include "bespoke/optimize.hpp"

namespace bespoke
{

namespace
{

// slack for thresholds given as decimal fractions, e.g. 0.85
constexpr double tau_slack = 1e-9;

} // namespace

std::vector<gate_tau> compute_tau( activity_profile const& a, netlist const& n )
{
  if ( a.num_nets() != n.num_nets || a.vector_count == 0 )
    throw error( fmt::format( "activity profile covers {} nets over {} vectors; netlist '{}' has {} nets", a.num_nets(),
                              a.vector_count, n.name, n.num_nets ) );
  std::vector<gate_tau> out;
  out.reserve( n.gates.size() );
  for ( auto const& g : n.gates )
  {
    auto const ones = a.ones[g.output];
    auto const zeros = a.vector_count - ones;
    bool const value = ones > zeros;
    auto const tau = static_cast<double>( std::max( ones, zeros ) ) / static_cast<double>( a.vector_count );
    out.push_back( { g.id, tau, value } );
  }
  return out;
}

std::vector<int> compute_phi( netlist const& n )
{
  std::vector<int> net_phi( n.num_nets, -1 );
  auto const& roots = n.role == circuit_role::classifier ? n.tracked : n.outputs;
  if ( n.role == circuit_role::classifier && roots.empty() )
    throw error( fmt::format( "classifier netlist '{}' carries no argmax-input buses", n.name ) );
  for ( auto const& b : roots )
  {
    for ( std::size_t i = 0; i < b.bits.size(); ++i )
      net_phi[b.bits[i]] = std::max( net_phi[b.bits[i]], static_cast<int>( i ) );
  }

  auto const order = topological_positions( n );
  std::vector<int> phi( n.gates.size(), -1 );
  for ( auto it = order.rbegin(); it != order.rend(); ++it )
  {
    auto const& g = n.gates[*it];
    auto const p = net_phi[g.output];
    phi[*it] = p;
    for ( auto in : g.inputs )
      net_phi[in] = std::max( net_phi[in], p );
  }
  if ( n.role == circuit_role::classifier )
  {
    for ( std::size_t i = 0; i < n.gates.size(); ++i )
    {
      if ( n.is_decision_gate( n.gates[i].id ) )
        phi[i] = phi_never;
    }
  }
  return phi;
}

std::vector<prune_candidate> prune_candidates( netlist const& n, activity_profile const& a )
{
  auto const tau = compute_tau( a, n );
  auto const phi = compute_phi( n );
  std::vector<prune_candidate> out;
  out.reserve( n.gates.size() );
  for ( std::size_t i = 0; i < n.gates.size(); ++i )
    out.push_back( { tau[i].gate, tau[i].tau, tau[i].const_value, phi[i] } );
  return out;
}

bool qualifies( prune_candidate const& c, double tau_c, int phi_c )
{
  return c.phi != phi_never && c.phi <= phi_c && c.tau >= tau_c - tau_slack;
}

std::vector<gate_id> select_pruned( std::span<prune_candidate const> cands, double tau_c, int phi_c )
{
  std::vector<gate_id> ids;
  for ( auto const& c : cands )
  {
    if ( qualifies( c, tau_c, phi_c ) )
      ids.push_back( c.gate );
  }
  std::sort( ids.begin(), ids.end() );
  return ids;
}

netlist prune( netlist const& n, std::span<prune_candidate const> cands, double tau_c, int phi_c,
               cell_library const& lib )
{
  if ( !( tau_c >= 0.5 && tau_c <= 1.0 ) )
    throw error( fmt::format( "tau threshold {} outside [0.5, 1]", tau_c ) );
  if ( phi_c < -1 )
    throw error( fmt::format( "phi threshold {} below -1", phi_c ) );

  std::vector<std::pair<gate_id, bool>> ties;
  for ( auto const& c : cands )
  {
    if ( qualifies( c, tau_c, phi_c ) )
      ties.emplace_back( c.gate, c.const_value );
  }
  std::sort( ties.begin(), ties.end() );
  auto out = optimize( tie_to_const( n, ties ), lib );

  std::vector<gate_id> removed;
  for ( auto const& [id, value] : ties )
    removed.push_back( id );
  out.meta["prune"] = { { "tau_c", tau_c }, { "phi_c", phi_c }, { "removed", removed } };
  return out;
}

nlohmann::json to_json( std::span<prune_candidate const> cands )
{
  auto arr = nlohmann::json::array();
  for ( auto const& c : cands )
  {
    arr.push_back( { { "gate", c.gate },
                     { "tau", c.tau },
                     { "const", c.const_value ? 1 : 0 },
                     { "phi", c.phi == phi_never ? nlohmann::json( "never" ) : nlohmann::json( c.phi ) } } );
  }
  return arr;
}

} // namespace bespoke
