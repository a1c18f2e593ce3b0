#include "bespoke/netlist.hpp"

#include <algorithm>
#include <functional>
#include <queue>
#include <set>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "bespoke/error.hpp"
#include "bespoke/json_util.hpp"

namespace bespoke
{

std::string to_string( circuit_role r )
{
  switch ( r )
  {
  case circuit_role::regressor:
    return "regressor";
  case circuit_role::classifier:
    return "classifier";
  default:
    return "generic";
  }
}

namespace
{

circuit_role circuit_role_from_string( std::string const& s )
{
  if ( s == "regressor" )
    return circuit_role::regressor;
  if ( s == "classifier" )
    return circuit_role::classifier;
  if ( s == "generic" )
    return circuit_role::generic;
  throw data_error( fmt::format( "unknown circuit role '{}'", s ) );
}

} // namespace

std::vector<net_id> netlist::add_nets( std::size_t n )
{
  std::vector<net_id> out( n );
  for ( auto& id : out )
    id = add_net();
  return out;
}

gate_id netlist::add_gate( std::string cell, std::vector<net_id> ins, net_id output )
{
  gate_id const id = gates.empty() ? 0 : gates.back().id + 1;
  gates.push_back( gate{ id, std::move( cell ), std::move( ins ), output } );
  return id;
}

gate const* netlist::find_gate( gate_id id ) const
{
  auto const it = std::lower_bound( gates.begin(), gates.end(), id, []( gate const& g, gate_id v ) { return g.id < v; } );
  return it != gates.end() && it->id == id ? &*it : nullptr;
}

bus const* netlist::find_input( std::string const& bus_name ) const
{
  auto const it = std::find_if( inputs.begin(), inputs.end(), [&]( auto const& b ) { return b.name == bus_name; } );
  return it == inputs.end() ? nullptr : &*it;
}

bus const* netlist::find_output( std::string const& bus_name ) const
{
  auto const it = std::find_if( outputs.begin(), outputs.end(), [&]( auto const& b ) { return b.name == bus_name; } );
  return it == outputs.end() ? nullptr : &*it;
}

std::size_t netlist::input_bit_count() const
{
  std::size_t n = 0;
  for ( auto const& b : inputs )
    n += b.width();
  return n;
}

bool netlist::is_decision_gate( gate_id id ) const
{
  return std::binary_search( decision_gates.begin(), decision_gates.end(), id );
}

namespace
{

/* Kahn's algorithm over gate positions; returns the order and leaves the
   in-degree of gates on or behind a cycle positive. */
std::vector<std::size_t> kahn( netlist const& n, std::vector<std::size_t>& indegree )
{
  std::vector<std::int64_t> driver( n.num_nets, -1 );
  for ( std::size_t p = 0; p < n.gates.size(); ++p )
  {
    if ( n.gates[p].output < n.num_nets )
      driver[n.gates[p].output] = static_cast<std::int64_t>( p );
  }
  std::vector<std::vector<std::size_t>> fanout( n.gates.size() );
  indegree.assign( n.gates.size(), 0 );
  for ( std::size_t p = 0; p < n.gates.size(); ++p )
  {
    for ( auto in : n.gates[p].inputs )
    {
      if ( in < n.num_nets && driver[in] >= 0 )
      {
        fanout[static_cast<std::size_t>( driver[in] )].push_back( p );
        ++indegree[p];
      }
    }
  }
  // gates are sorted by id, so the smallest position is the smallest id
  std::priority_queue<std::size_t, std::vector<std::size_t>, std::greater<>> ready;
  for ( std::size_t p = 0; p < n.gates.size(); ++p )
  {
    if ( indegree[p] == 0 )
      ready.push( p );
  }
  std::vector<std::size_t> order;
  order.reserve( n.gates.size() );
  while ( !ready.empty() )
  {
    auto const p = ready.top();
    ready.pop();
    order.push_back( p );
    for ( auto q : fanout[p] )
    {
      if ( --indegree[q] == 0 )
        ready.push( q );
    }
  }
  return order;
}

std::vector<gate_id> find_cycle( netlist const& n, std::vector<std::size_t> const& indegree )
{
  std::vector<std::int64_t> driver( n.num_nets, -1 );
  for ( std::size_t p = 0; p < n.gates.size(); ++p )
  {
    if ( indegree[p] > 0 && n.gates[p].output < n.num_nets )
      driver[n.gates[p].output] = static_cast<std::int64_t>( p );
  }
  auto start = std::find_if( indegree.begin(), indegree.end(), []( auto d ) { return d > 0; } );
  if ( start == indegree.end() )
    return {};
  std::vector<std::int64_t> seen_at( n.gates.size(), -1 );
  std::vector<std::size_t> walk;
  auto cur = static_cast<std::size_t>( start - indegree.begin() );
  while ( seen_at[cur] < 0 )
  {
    seen_at[cur] = static_cast<std::int64_t>( walk.size() );
    walk.push_back( cur );
    std::int64_t next = -1;
    for ( auto in : n.gates[cur].inputs )
    {
      if ( in < n.num_nets && driver[in] >= 0 )
      {
        next = driver[in];
        break;
      }
    }
    if ( next < 0 )
      return {};
    cur = static_cast<std::size_t>( next );
  }
  std::vector<gate_id> cycle;
  for ( auto i = static_cast<std::size_t>( seen_at[cur] ); i < walk.size(); ++i )
    cycle.push_back( n.gates[walk[i]].id );
  std::sort( cycle.begin(), cycle.end() );
  return cycle;
}

} // namespace

diagnostics validate( netlist const& n, cell_library const* lib )
{
  diagnostics d;
  auto report = [&]( std::string msg ) {
    if ( d.messages.size() < 10 )
      d.messages.push_back( std::move( msg ) );
  };

  if ( n.num_nets < 2 )
  {
    report( "netlist must declare the two constant nets" );
    return d;
  }

  std::vector<unsigned> drivers( n.num_nets, 0 );
  drivers[const0_net] = drivers[const1_net] = 1;
  auto check_ref = [&]( net_id id, std::string const& where ) {
    if ( id >= n.num_nets )
    {
      report( fmt::format( "{} references undeclared net {}", where, id ) );
      return false;
    }
    return true;
  };

  for ( auto const& b : n.inputs )
  {
    for ( std::size_t i = 0; i < b.bits.size(); ++i )
    {
      auto const where = fmt::format( "input {}[{}]", b.name, i );
      if ( !check_ref( b.bits[i], where ) )
        continue;
      if ( is_const_net( b.bits[i] ) )
        report( fmt::format( "{} drives constant net {}", where, b.bits[i] ) );
      else if ( ++drivers[b.bits[i]] == 2 )
        report( fmt::format( "net {} has multiple drivers ({})", b.bits[i], where ) );
    }
  }

  for ( std::size_t p = 0; p < n.gates.size(); ++p )
  {
    auto const& g = n.gates[p];
    if ( p > 0 && n.gates[p - 1].id >= g.id )
      report( fmt::format( "gate ids not strictly increasing at gate {}", g.id ) );
    auto const where = fmt::format( "gate {}", g.id );
    if ( check_ref( g.output, where ) )
    {
      if ( is_const_net( g.output ) )
        report( fmt::format( "gate {} drives constant net {}", g.id, g.output ) );
      else if ( ++drivers[g.output] == 2 )
        report( fmt::format( "net {} has multiple drivers (gate {})", g.output, g.id ) );
    }
    for ( auto in : g.inputs )
      check_ref( in, where );
    if ( lib )
    {
      auto const* c = lib->find( g.cell );
      if ( !c )
        report( fmt::format( "gate {} uses unknown cell '{}'", g.id, g.cell ) );
      else if ( c->arity != g.inputs.size() )
        report( fmt::format( "gate {} has {} inputs but cell '{}' has arity {}", g.id, g.inputs.size(), g.cell, c->arity ) );
    }
    else if ( g.inputs.empty() || g.inputs.size() > 3 )
      report( fmt::format( "gate {} has {} inputs", g.id, g.inputs.size() ) );
  }

  auto check_read = [&]( net_id id, std::string const& where ) {
    if ( id < n.num_nets && drivers[id] == 0 )
      report( fmt::format( "net {} read by {} has no driver", id, where ) );
  };
  for ( auto const& g : n.gates )
  {
    for ( auto in : g.inputs )
      check_read( in, fmt::format( "gate {}", g.id ) );
  }
  for ( auto const* group : { &n.outputs, &n.tracked } )
  {
    for ( auto const& b : *group )
    {
      for ( std::size_t i = 0; i < b.bits.size(); ++i )
      {
        auto const where = fmt::format( "{} {}[{}]", group == &n.outputs ? "output" : "tracked bus", b.name, i );
        if ( check_ref( b.bits[i], where ) )
          check_read( b.bits[i], where );
      }
    }
  }

  std::vector<std::size_t> indegree;
  auto const order = kahn( n, indegree );
  if ( order.size() != n.gates.size() )
  {
    auto const cycle = find_cycle( n, indegree );
    report( fmt::format( "combinational cycle through gates {}", fmt::join( cycle, ", " ) ) );
  }

  if ( ( n.role == circuit_role::classifier ) != !n.tracked.empty() )
    report( "argmax-input bus metadata must be present exactly for classifier circuits" );
  for ( auto id : n.decision_gates )
  {
    if ( !n.find_gate( id ) )
      report( fmt::format( "decision gate {} does not exist", id ) );
  }
  if ( !std::is_sorted( n.decision_gates.begin(), n.decision_gates.end() ) )
    report( "decision gate list is not sorted" );
  return d;
}

std::vector<std::size_t> topological_positions( netlist const& n )
{
  std::vector<std::size_t> indegree;
  auto order = kahn( n, indegree );
  if ( order.size() != n.gates.size() )
  {
    auto const cycle = find_cycle( n, indegree );
    throw error( fmt::format( "netlist '{}' has a combinational cycle through gates {}", n.name, fmt::join( cycle, ", " ) ) );
  }
  return order;
}

std::vector<gate_id> levelize( netlist const& n )
{
  std::vector<gate_id> ids;
  for ( auto p : topological_positions( n ) )
    ids.push_back( n.gates[p].id );
  return ids;
}

netlist tie_to_const( netlist const& n, gate_id g, bool value )
{
  std::pair<gate_id, bool> const tie{ g, value };
  return tie_to_const( n, std::span{ &tie, 1 } );
}

netlist tie_to_const( netlist const& n, std::span<std::pair<gate_id, bool> const> ties )
{
  std::vector<net_id> redirect( n.num_nets );
  for ( net_id i = 0; i < n.num_nets; ++i )
    redirect[i] = i;
  std::vector<bool> removed( n.gates.size(), false );
  for ( auto const& [id, value] : ties )
  {
    auto const* g = n.find_gate( id );
    if ( !g )
      throw error( fmt::format( "tie_to_const: unknown gate {}", id ) );
    auto const pos = static_cast<std::size_t>( g - n.gates.data() );
    removed[pos] = true;
    redirect[g->output] = const_net( value );
  }

  netlist out;
  out.name = n.name;
  out.role = n.role;
  out.num_nets = n.num_nets;
  out.inputs = n.inputs;
  out.meta = n.meta;
  out.gates.reserve( n.gates.size() );
  for ( std::size_t p = 0; p < n.gates.size(); ++p )
  {
    if ( removed[p] )
      continue;
    auto g = n.gates[p];
    for ( auto& in : g.inputs )
      in = redirect[in];
    out.gates.push_back( std::move( g ) );
  }
  auto remap = [&]( std::vector<bus> const& buses ) {
    auto copy = buses;
    for ( auto& b : copy )
    {
      for ( auto& bit : b.bits )
        bit = redirect[bit];
    }
    return copy;
  };
  out.outputs = remap( n.outputs );
  out.tracked = remap( n.tracked );
  for ( auto id : n.decision_gates )
  {
    if ( out.find_gate( id ) )
      out.decision_gates.push_back( id );
  }
  return out;
}

area_report area( netlist const& n, cell_library const& lib )
{
  area_report r;
  for ( auto const& g : n.gates )
  {
    r.total_area += lib.at( g.cell ).area;
    ++r.cell_counts[g.cell];
  }
  r.gate_count = n.gates.size();
  return r;
}

/* Serialization */

namespace
{

nlohmann::json bus_json( bus const& b )
{
  return { { "name", b.name }, { "bits", b.bits }, { "signed", b.is_signed } };
}

bus bus_from_json( nlohmann::json const& j, std::string const& ctx )
{
  bus b;
  b.name = require( j, "name", ctx ).get<std::string>();
  b.bits = require( j, "bits", ctx ).get<std::vector<net_id>>();
  b.is_signed = j.value( "signed", false );
  return b;
}

} // namespace

nlohmann::json to_json( netlist const& n )
{
  nlohmann::json j;
  j["format"] = "bespoke-netlist";
  j["version"] = 1;
  j["name"] = n.name;
  j["role"] = to_string( n.role );
  j["nets"] = n.num_nets;
  for ( auto const& [key, group] : { std::pair{ "inputs", &n.inputs }, std::pair{ "outputs", &n.outputs }, std::pair{ "tracked", &n.tracked } } )
  {
    j[key] = nlohmann::json::array();
    for ( auto const& b : *group )
      j[key].push_back( bus_json( b ) );
  }
  j["gates"] = nlohmann::json::array();
  for ( auto const& g : n.gates )
    j["gates"].push_back( { { "id", g.id }, { "cell", g.cell }, { "inputs", g.inputs }, { "output", g.output } } );
  j["decision_gates"] = n.decision_gates;
  j["meta"] = n.meta;
  return j;
}

netlist netlist_from_json( nlohmann::json const& j )
{
  auto n = json_guard( "netlist", [&] {
    if ( j.value( "format", std::string{} ) != "bespoke-netlist" )
      throw data_error( "netlist: field 'format' must be \"bespoke-netlist\"" );
    if ( j.value( "version", 0 ) != 1 )
      throw data_error( "netlist: unsupported format version" );
    netlist n;
    n.name = j.value( "name", std::string{} );
    n.role = circuit_role_from_string( j.value( "role", std::string{ "generic" } ) );
    n.num_nets = require( j, "nets", "netlist" ).get<std::uint32_t>();
    for ( auto const& [key, group] : { std::pair{ "inputs", &n.inputs }, std::pair{ "outputs", &n.outputs }, std::pair{ "tracked", &n.tracked } } )
    {
      if ( !j.contains( key ) )
        continue;
      auto const& arr = j[key];
      for ( std::size_t i = 0; i < arr.size(); ++i )
        group->push_back( bus_from_json( arr[i], fmt::format( "netlist.{}[{}]", key, i ) ) );
    }
    auto const& gates = require( j, "gates", "netlist" );
    for ( std::size_t i = 0; i < gates.size(); ++i )
    {
      auto const ctx = fmt::format( "netlist.gates[{}]", i );
      gate g;
      g.id = require( gates[i], "id", ctx ).get<gate_id>();
      g.cell = require( gates[i], "cell", ctx ).get<std::string>();
      g.inputs = require( gates[i], "inputs", ctx ).get<std::vector<net_id>>();
      g.output = require( gates[i], "output", ctx ).get<net_id>();
      n.gates.push_back( std::move( g ) );
    }
    n.decision_gates = j.value( "decision_gates", std::vector<gate_id>{} );
    n.meta = j.value( "meta", nlohmann::json::object() );
    return n;
  } );
  auto const d = validate( n );
  if ( !d.ok() )
    throw data_error( fmt::format( "netlist '{}' is invalid: {}", n.name, fmt::join( d.messages, "; " ) ) );
  return n;
}

void save_netlist( netlist const& n, std::filesystem::path const& path )
{
  write_text_file( path, to_json( n ).dump() + "\n" );
}

netlist load_netlist( std::filesystem::path const& path )
{
  return netlist_from_json( read_json_file( path ) );
}

} // namespace bespoke
