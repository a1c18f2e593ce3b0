#include "bespoke/optimize.hpp"

#include <algorithm>
#include <array>
#include <numeric>
#include <optional>
#include <unordered_map>

#include <fmt/format.h>

#include "bespoke/error.hpp"

namespace bespoke
{

namespace
{

constexpr std::uint32_t not_function = 0b01;
constexpr std::uint32_t identity_function = 0b10;

struct cell_match
{
  std::size_t cell;
  std::array<std::uint8_t, 3> var_of_pin; // pin p reads variable var_of_pin[p]
};

/* Precomputed per-library facts used by the rewrite rules. */
struct library_index
{
  std::vector<cell> const* cells;
  std::vector<bool> symmetric;
  // (arity, function over variables) -> cheapest cell/pin assignment
  std::unordered_map<std::uint32_t, cell_match> best;

  static std::uint32_t key( unsigned arity, std::uint32_t fn ) { return ( arity << 16 ) | fn; }

  explicit library_index( cell_library const& lib ) : cells( &lib.cells() )
  {
    for ( std::size_t c = 0; c < cells->size(); ++c )
    {
      auto const& cl = ( *cells )[c];
      std::array<std::uint8_t, 3> perm{ 0, 1, 2 };
      bool sym = true;
      do
      {
        // distinct assignments of the `arity` variables to the pins
        if ( !std::is_sorted( perm.begin() + cl.arity, perm.end() ) ||
             std::any_of( perm.begin(), perm.begin() + cl.arity, [&]( auto v ) { return v >= cl.arity; } ) )
          continue;
        std::uint32_t fn = 0;
        for ( unsigned m = 0; m < ( 1u << cl.arity ); ++m )
        {
          unsigned cm = 0;
          for ( unsigned p = 0; p < cl.arity; ++p )
            cm |= ( ( m >> perm[p] ) & 1u ) << p;
          fn |= static_cast<std::uint32_t>( eval_truth_table( cl.truth_table, cm ) ) << m;
        }
        if ( fn != cl.truth_table )
          sym = false;
        auto const k = key( cl.arity, fn );
        auto const it = best.find( k );
        if ( it == best.end() || cl.area < ( *cells )[it->second.cell].area )
          best[k] = cell_match{ c, perm };
      } while ( std::next_permutation( perm.begin(), perm.end() ) );
      symmetric.push_back( sym );
    }
  }

  std::optional<cell_match> lookup( unsigned arity, std::uint32_t fn ) const
  {
    auto const it = best.find( key( arity, fn ) );
    if ( it == best.end() )
      return std::nullopt;
    return it->second;
  }
};

struct work_gate
{
  gate_id id;
  std::size_t cell;
  std::vector<net_id> inputs;
  net_id output;
  bool alive{ true };
};

struct hash_key
{
  std::size_t cell;
  std::array<net_id, 3> in;

  bool operator==( hash_key const& ) const = default;
};

struct hash_key_hasher
{
  std::size_t operator()( hash_key const& k ) const
  {
    std::uint64_t h = k.cell * 0x9e3779b97f4a7c15ull;
    for ( auto v : k.in )
      h = ( h ^ v ) * 0x100000001b3ull + ( h >> 29 );
    return static_cast<std::size_t>( h );
  }
};

bool depends_on( std::uint32_t fn, std::size_t num_vars, std::size_t v )
{
  for ( unsigned m = 0; m < ( 1u << num_vars ); ++m )
  {
    if ( !( ( m >> v ) & 1u ) && ( ( fn >> m ) & 1u ) != ( ( fn >> ( m | ( 1u << v ) ) ) & 1u ) )
      return true;
  }
  return false;
}

std::uint32_t drop_variable( std::uint32_t fn, std::size_t num_vars, std::size_t v )
{
  std::uint32_t out = 0;
  for ( unsigned m = 0; m < ( 1u << ( num_vars - 1 ) ); ++m )
  {
    unsigned const low = m & ( ( 1u << v ) - 1u );
    unsigned const full = ( ( m >> v ) << ( v + 1 ) ) | low;
    out |= ( ( fn >> full ) & 1u ) << m;
  }
  return out;
}

net_id resolve( std::vector<net_id>& rep, net_id n )
{
  while ( rep[n] != n )
  {
    rep[n] = rep[rep[n]];
    n = rep[n];
  }
  return n;
}

/* One topological sweep plus dead-gate removal; returns whether anything changed. */
bool sweep( netlist& n, library_index const& idx, cell_library const& lib, optimize_stats& st )
{
  auto const& cells = *idx.cells;
  auto const order = topological_positions( n );

  std::vector<work_gate> work;
  work.reserve( n.gates.size() );
  for ( auto const& g : n.gates )
  {
    auto const ci = lib.index_of( g.cell );
    if ( !ci )
      throw error( fmt::format( "optimize: gate {} uses cell '{}' missing from library '{}'", g.id, g.cell, lib.name() ) );
    work.push_back( work_gate{ g.id, *ci, g.inputs, g.output } );
  }

  std::vector<bool> decision( work.size(), false );
  for ( std::size_t p = 0; p < work.size(); ++p )
    decision[p] = n.is_decision_gate( work[p].id );

  std::vector<net_id> rep( n.num_nets );
  std::iota( rep.begin(), rep.end(), 0 );
  std::vector<net_id> inverse_of( n.num_nets, 0 ); // net -> x when net = NOT x (0: none)
  std::vector<std::int64_t> driver_pos( n.num_nets, -1 );
  std::unordered_map<hash_key, std::size_t, hash_key_hasher> strash;
  bool changed = false;

  for ( auto p : order )
  {
    auto& g = work[p];
    auto const& cl = cells[g.cell];
    for ( auto& in : g.inputs )
      in = resolve( rep, in );

    // reduce the cell function over distinct non-constant inputs
    std::vector<net_id> vars;
    std::array<int, 3> var_of_pin{ -1, -1, -1 };
    bool has_const = false;
    for ( unsigned pin = 0; pin < cl.arity; ++pin )
    {
      auto const in = g.inputs[pin];
      if ( is_const_net( in ) )
      {
        has_const = true;
        continue;
      }
      auto const it = std::find( vars.begin(), vars.end(), in );
      var_of_pin[pin] = static_cast<int>( it - vars.begin() );
      if ( it == vars.end() )
        vars.push_back( in );
    }
    std::uint32_t fn = 0;
    for ( unsigned m = 0; m < ( 1u << vars.size() ); ++m )
    {
      unsigned cm = 0;
      for ( unsigned pin = 0; pin < cl.arity; ++pin )
      {
        bool const bit = var_of_pin[pin] < 0 ? g.inputs[pin] == const1_net : ( ( m >> var_of_pin[pin] ) & 1u );
        cm |= static_cast<unsigned>( bit ) << pin;
      }
      fn |= static_cast<std::uint32_t>( eval_truth_table( cl.truth_table, cm ) ) << m;
    }
    for ( std::size_t v = vars.size(); v-- > 0; )
    {
      if ( !depends_on( fn, vars.size(), v ) )
      {
        fn = drop_variable( fn, vars.size(), v );
        vars.erase( vars.begin() + static_cast<std::ptrdiff_t>( v ) );
      }
    }
    std::uint32_t const full = ( 1u << ( 1u << vars.size() ) ) - 1u;

    // (1) constant propagation
    if ( fn == 0 || fn == full )
    {
      rep[g.output] = const_net( fn == full );
      g.alive = false;
      ++st.constants;
      changed = true;
      continue;
    }

    if ( vars.size() == 1 && fn == identity_function )
    {
      // (2) identity: forward the input
      rep[g.output] = vars[0];
      g.alive = false;
      ++st.identities;
      changed = true;
      continue;
    }
    if ( vars.size() == 1 && fn == not_function && inverse_of[vars[0]] != 0 )
    {
      // (3) double inverter
      rep[g.output] = inverse_of[vars[0]];
      g.alive = false;
      ++st.inverters;
      changed = true;
      continue;
    }
    if ( has_const || vars.size() < cl.arity )
    {
      // (2) controlled-input simplification onto a cheaper cell
      if ( auto const m = idx.lookup( static_cast<unsigned>( vars.size() ), fn ); m && cells[m->cell].area <= cl.area )
      {
        std::vector<net_id> ins( cells[m->cell].arity );
        for ( unsigned pin = 0; pin < ins.size(); ++pin )
          ins[pin] = vars[m->var_of_pin[pin]];
        g.cell = m->cell;
        g.inputs = std::move( ins );
        ++st.identities;
        changed = true;
      }
    }

    auto const& cur = cells[g.cell];
    if ( idx.symmetric[g.cell] )
      std::sort( g.inputs.begin(), g.inputs.end() );

    // (4) structural hashing
    hash_key k{ g.cell, { 0, 0, 0 } };
    std::copy( g.inputs.begin(), g.inputs.end(), k.in.begin() );
    if ( auto const it = strash.find( k ); it != strash.end() )
    {
      auto const survivor = it->second;
      rep[g.output] = work[survivor].output;
      g.alive = false;
      if ( decision[p] )
        decision[survivor] = true;
      ++st.merged;
      changed = true;
      continue;
    }
    strash.emplace( k, p );
    driver_pos[g.output] = static_cast<std::int64_t>( p );
    if ( cur.arity == 1 && cur.truth_table == not_function )
      inverse_of[g.output] = g.inputs[0];
  }

  for ( auto* group : { &n.outputs, &n.tracked } )
  {
    for ( auto& b : *group )
    {
      for ( auto& bit : b.bits )
        bit = resolve( rep, bit );
    }
  }

  // (5) dead-gate elimination from primary outputs and tracked buses
  std::vector<bool> live( n.num_nets, false );
  for ( auto const* group : { &n.outputs, &n.tracked } )
  {
    for ( auto const& b : *group )
    {
      for ( auto bit : b.bits )
        live[bit] = true;
    }
  }
  for ( auto it = order.rbegin(); it != order.rend(); ++it )
  {
    auto& g = work[*it];
    if ( !g.alive )
      continue;
    if ( !live[g.output] )
    {
      g.alive = false;
      ++st.dead;
      changed = true;
      continue;
    }
    for ( auto in : g.inputs )
      live[in] = true;
  }

  std::vector<gate> gates;
  std::vector<gate_id> decision_ids;
  for ( std::size_t p = 0; p < work.size(); ++p )
  {
    auto& g = work[p];
    if ( !g.alive )
      continue;
    if ( g.inputs != n.gates[p].inputs || cells[g.cell].name != n.gates[p].cell )
      changed = true;
    gates.push_back( gate{ g.id, cells[g.cell].name, std::move( g.inputs ), g.output } );
    if ( decision[p] )
      decision_ids.push_back( g.id );
  }
  n.gates = std::move( gates );
  n.decision_gates = std::move( decision_ids );
  return changed;
}

} // namespace

netlist optimize( netlist const& n, cell_library const& lib, optimize_stats* stats )
{
  library_index const idx( lib );
  optimize_stats local;
  auto& st = stats ? *stats : local;
  st = optimize_stats{};

  netlist out = n;
  constexpr std::size_t max_sweeps = 64;
  while ( st.iterations < max_sweeps )
  {
    ++st.iterations;
    if ( !sweep( out, idx, lib, st ) )
      break;
  }
  return out;
}

} // namespace bespoke
