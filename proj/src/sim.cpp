#include "bespoke/sim.hpp"

#include <algorithm>
#include <bit>

#include <fmt/format.h>
#include <omp.h>

#include "bespoke/error.hpp"

namespace bespoke
{

namespace
{

enum op_kind : std::uint8_t
{
  k_generic,
  k_buf,
  k_inv,
  k_and,
  k_or,
  k_xor,
  k_nand,
  k_nor,
  k_xnor,
  k_mux
};

std::uint8_t classify( unsigned arity, std::uint32_t tt )
{
  if ( arity == 1 )
    return tt == 0b01 ? k_inv : tt == 0b10 ? k_buf : k_generic;
  if ( arity == 2 )
  {
    switch ( tt )
    {
    case 0b1000:
      return k_and;
    case 0b1110:
      return k_or;
    case 0b0110:
      return k_xor;
    case 0b0111:
      return k_nand;
    case 0b0001:
      return k_nor;
    case 0b1001:
      return k_xnor;
    default:
      return k_generic;
    }
  }
  return tt == 0b11001010 ? k_mux : k_generic;
}

std::uint64_t eval_generic( std::uint32_t tt, unsigned arity, std::uint64_t const* x )
{
  std::uint64_t out = 0;
  for ( unsigned m = 0; m < ( 1u << arity ); ++m )
  {
    if ( !eval_truth_table( tt, m ) )
      continue;
    std::uint64_t term = ~std::uint64_t{ 0 };
    for ( unsigned p = 0; p < arity; ++p )
      term &= ( ( m >> p ) & 1u ) ? x[p] : ~x[p];
    out |= term;
  }
  return out;
}

std::int64_t decode( std::uint64_t raw, std::size_t width, bool is_signed )
{
  if ( is_signed && width > 0 && width < 64 && ( ( raw >> ( width - 1 ) ) & 1u ) )
    return static_cast<std::int64_t>( raw ) - ( std::int64_t{ 1 } << width );
  return static_cast<std::int64_t>( raw );
}

/* Column of the stimulus feeding each netlist input bus, with range checks. */
std::vector<std::size_t> bind_inputs( netlist const& n, stimulus const& s )
{
  if ( s.rows.empty() )
    throw data_error( "stimulus has no vectors" );
  if ( s.buses.size() != n.inputs.size() )
    throw data_error( fmt::format( "stimulus binds {} buses but netlist '{}' has {} inputs", s.buses.size(), n.name, n.inputs.size() ) );
  std::vector<std::size_t> column;
  for ( auto const& b : n.inputs )
  {
    auto const it = std::find( s.buses.begin(), s.buses.end(), b.name );
    if ( it == s.buses.end() )
      throw data_error( fmt::format( "input bus '{}' is not bound by the stimulus", b.name ) );
    column.push_back( static_cast<std::size_t>( it - s.buses.begin() ) );
  }
  for ( std::size_t v = 0; v < s.rows.size(); ++v )
  {
    if ( s.rows[v].size() != s.buses.size() )
      throw data_error( fmt::format( "stimulus vector {} has {} values for {} buses", v, s.rows[v].size(), s.buses.size() ) );
    for ( std::size_t i = 0; i < n.inputs.size(); ++i )
    {
      auto const& b = n.inputs[i];
      auto const val = s.rows[v][column[i]];
      auto const w = b.width();
      std::int64_t const lo = b.is_signed ? -( std::int64_t{ 1 } << ( w - 1 ) ) : 0;
      std::int64_t const hi = b.is_signed ? ( std::int64_t{ 1 } << ( w - 1 ) ) - 1 : ( std::int64_t{ 1 } << w ) - 1;
      if ( w < 63 && ( val < lo || val > hi ) )
        throw data_error( fmt::format( "stimulus vector {}: value {} does not fit {}-bit bus '{}'", v, val, w, b.name ) );
    }
  }
  return column;
}

} // namespace

stimulus feature_stimulus( std::vector<std::vector<std::int64_t>> const& features )
{
  stimulus s;
  if ( !features.empty() )
  {
    for ( std::size_t i = 0; i < features.front().size(); ++i )
      s.buses.push_back( fmt::format( "x{}", i ) );
  }
  s.rows = features;
  return s;
}

double activity_profile::p_one( net_id n ) const
{
  return vector_count ? static_cast<double>( ones.at( n ) ) / static_cast<double>( vector_count ) : 0.0;
}

double activity_profile::toggle_rate( net_id n ) const
{
  return vector_count > 1 ? static_cast<double>( toggles.at( n ) ) / static_cast<double>( vector_count - 1 ) : 0.0;
}

simulator::simulator( netlist const& n, cell_library const& lib ) : n_( &n )
{
  for ( auto p : topological_positions( n ) )
  {
    auto const& g = n.gates[p];
    auto const& c = lib.at( g.cell );
    if ( c.arity != g.inputs.size() )
      throw error( fmt::format( "gate {} has {} inputs but cell '{}' has arity {}", g.id, g.inputs.size(), c.name, c.arity ) );
    op o{ classify( c.arity, c.truth_table ), static_cast<std::uint8_t>( c.arity ), c.truth_table, { 0, 0, 0 }, g.output };
    std::copy( g.inputs.begin(), g.inputs.end(), o.in.begin() );
    ops_.push_back( o );
  }
}

sim_result simulator::run( stimulus const& s, sim_options const& opts ) const
{
  auto const& n = *n_;
  auto const column = bind_inputs( n, s );
  std::size_t const vectors = s.rows.size();
  std::size_t const nets = n.num_nets;
  std::size_t const blocks = ( vectors + 63 ) / 64;
  int const threads = opts.threads > 0 ? opts.threads : omp_get_max_threads();

  std::vector<std::uint64_t> words( blocks * nets, 0 );

#pragma omp parallel for schedule( static ) num_threads( threads )
  for ( std::size_t b = 0; b < blocks; ++b )
  {
    auto* w = words.data() + b * nets;
    w[const0_net] = 0;
    w[const1_net] = ~std::uint64_t{ 0 };
    std::size_t const first = b * 64;
    std::size_t const count = std::min<std::size_t>( 64, vectors - first );
    for ( std::size_t i = 0; i < n.inputs.size(); ++i )
    {
      auto const& bits = n.inputs[i].bits;
      for ( std::size_t t = 0; t < count; ++t )
      {
        auto const val = static_cast<std::uint64_t>( s.rows[first + t][column[i]] );
        for ( std::size_t k = 0; k < bits.size(); ++k )
          w[bits[k]] |= ( ( val >> k ) & 1u ) << t;
      }
    }
    for ( auto const& o : ops_ )
    {
      std::uint64_t const a = w[o.in[0]];
      std::uint64_t r;
      switch ( o.kind )
      {
      case k_buf:
        r = a;
        break;
      case k_inv:
        r = ~a;
        break;
      case k_and:
        r = a & w[o.in[1]];
        break;
      case k_or:
        r = a | w[o.in[1]];
        break;
      case k_xor:
        r = a ^ w[o.in[1]];
        break;
      case k_nand:
        r = ~( a & w[o.in[1]] );
        break;
      case k_nor:
        r = ~( a | w[o.in[1]] );
        break;
      case k_xnor:
        r = ~( a ^ w[o.in[1]] );
        break;
      case k_mux:
        r = ( a & ~w[o.in[2]] ) | ( w[o.in[1]] & w[o.in[2]] );
        break;
      default:
      {
        std::uint64_t const x[3] = { a, o.arity > 1 ? w[o.in[1]] : 0, o.arity > 2 ? w[o.in[2]] : 0 };
        r = eval_generic( o.tt, o.arity, x );
      }
      }
      w[o.out] = r;
    }
  }

  sim_result result;
  auto decode_buses = [&]( std::vector<bus> const& buses, word_rows& out ) {
    out.assign( vectors, std::vector<std::int64_t>( buses.size() ) );
#pragma omp parallel for schedule( static ) num_threads( threads )
    for ( std::size_t v = 0; v < vectors; ++v )
    {
      auto const* w = words.data() + ( v / 64 ) * nets;
      auto const t = v % 64;
      for ( std::size_t i = 0; i < buses.size(); ++i )
      {
        std::uint64_t raw = 0;
        auto const& bits = buses[i].bits;
        for ( std::size_t k = 0; k < bits.size() && k < 64; ++k )
          raw |= ( ( w[bits[k]] >> t ) & 1u ) << k;
        out[v][i] = decode( raw, bits.size(), buses[i].is_signed );
      }
    }
  };
  decode_buses( n.outputs, result.outputs );
  if ( opts.tracked )
    decode_buses( n.tracked, result.tracked );

  if ( opts.profile )
  {
    auto& prof = result.profile;
    prof.vector_count = vectors;
    prof.ones.assign( nets, 0 );
    prof.toggles.assign( nets, 0 );
#pragma omp parallel for schedule( static ) num_threads( threads )
    for ( std::size_t net = 0; net < nets; ++net )
    {
      std::uint64_t ones = 0, toggles = 0, prev = 0;
      for ( std::size_t b = 0; b < blocks; ++b )
      {
        std::size_t const count = std::min<std::size_t>( 64, vectors - b * 64 );
        std::uint64_t const valid = count == 64 ? ~std::uint64_t{ 0 } : ( std::uint64_t{ 1 } << count ) - 1;
        std::uint64_t const w = words[b * nets + net] & valid;
        ones += static_cast<std::uint64_t>( std::popcount( w ) );
        std::uint64_t diff = ( w ^ ( ( w << 1 ) | prev ) ) & valid;
        if ( b == 0 )
          diff &= ~std::uint64_t{ 1 };
        toggles += static_cast<std::uint64_t>( std::popcount( diff ) );
        prev = ( w >> ( count - 1 ) ) & 1u;
      }
      prof.ones[net] = ones;
      prof.toggles[net] = toggles;
    }
  }
  return result;
}

word_rows simulate( netlist const& n, cell_library const& lib, stimulus const& s, int threads )
{
  sim_options opts;
  opts.threads = threads;
  return simulator( n, lib ).run( s, opts ).outputs;
}

activity_profile profile( netlist const& n, cell_library const& lib, stimulus const& s, int threads )
{
  sim_options opts;
  opts.threads = threads;
  opts.profile = true;
  return simulator( n, lib ).run( s, opts ).profile;
}

namespace
{

/* Runs the serial per-vector evaluation, calling `visit` with the net values of each vector. */
template<typename Visit>
void reference_walk( netlist const& n, cell_library const& lib, stimulus const& s, Visit&& visit )
{
  auto const column = bind_inputs( n, s );
  auto const order = topological_positions( n );
  std::vector<cell const*> cells( n.gates.size() );
  for ( std::size_t p = 0; p < n.gates.size(); ++p )
    cells[p] = &lib.at( n.gates[p].cell );

  std::vector<std::uint8_t> value( n.num_nets, 0 );
  for ( std::size_t v = 0; v < s.rows.size(); ++v )
  {
    std::fill( value.begin(), value.end(), 0 );
    value[const1_net] = 1;
    for ( std::size_t i = 0; i < n.inputs.size(); ++i )
    {
      auto const val = static_cast<std::uint64_t>( s.rows[v][column[i]] );
      auto const& bits = n.inputs[i].bits;
      for ( std::size_t k = 0; k < bits.size(); ++k )
        value[bits[k]] = ( val >> k ) & 1u;
    }
    for ( auto p : order )
    {
      auto const& g = n.gates[p];
      unsigned m = 0;
      for ( std::size_t pin = 0; pin < g.inputs.size(); ++pin )
        m |= static_cast<unsigned>( value[g.inputs[pin]] ) << pin;
      value[g.output] = eval_truth_table( cells[p]->truth_table, m );
    }
    visit( v, value );
  }
}

} // namespace

word_rows simulate_reference( netlist const& n, cell_library const& lib, stimulus const& s )
{
  word_rows out;
  reference_walk( n, lib, s, [&]( std::size_t, std::vector<std::uint8_t> const& value ) {
    std::vector<std::int64_t> row;
    for ( auto const& b : n.outputs )
    {
      std::uint64_t raw = 0;
      for ( std::size_t k = 0; k < b.bits.size(); ++k )
        raw |= static_cast<std::uint64_t>( value[b.bits[k]] ) << k;
      row.push_back( decode( raw, b.width(), b.is_signed ) );
    }
    out.push_back( std::move( row ) );
  } );
  return out;
}

activity_profile profile_reference( netlist const& n, cell_library const& lib, stimulus const& s )
{
  activity_profile prof;
  prof.ones.assign( n.num_nets, 0 );
  prof.toggles.assign( n.num_nets, 0 );
  std::vector<std::uint8_t> previous;
  reference_walk( n, lib, s, [&]( std::size_t v, std::vector<std::uint8_t> const& value ) {
    for ( std::size_t net = 0; net < value.size(); ++net )
    {
      prof.ones[net] += value[net];
      if ( v > 0 && value[net] != previous[net] )
        ++prof.toggles[net];
    }
    previous = value;
  } );
  prof.vector_count = s.rows.size();
  return prof;
}

nlohmann::json to_json( activity_profile const& a )
{
  nlohmann::json nets = nlohmann::json::object();
  for ( net_id n = 0; n < a.num_nets(); ++n )
  {
    nets[std::to_string( n )] = { { "p_one", a.p_one( n ) }, { "toggle_rate", a.toggle_rate( n ) }, { "ones", a.ones[n] }, { "toggles", a.toggles[n] } };
  }
  return { { "format", "bespoke-activity" }, { "version", 1 }, { "vector_count", a.vector_count }, { "nets", std::move( nets ) } };
}

equiv_report check_equiv( netlist const& n, cell_library const& lib, oracle_fn const& oracle, stimulus const& s, std::size_t max_reported )
{
  auto const column = bind_inputs( n, s );
  auto const got = simulate( n, lib, s );
  equiv_report report;
  report.vectors_checked = s.rows.size();
  std::vector<std::int64_t> ins( n.inputs.size() );
  for ( std::size_t v = 0; v < s.rows.size(); ++v )
  {
    for ( std::size_t i = 0; i < ins.size(); ++i )
      ins[i] = s.rows[v][column[i]];
    auto expected = oracle( ins );
    if ( expected != got[v] )
    {
      ++report.mismatch_count;
      if ( report.mismatches.size() < max_reported )
        report.mismatches.push_back( mismatch{ ins, got[v], std::move( expected ) } );
    }
  }
  return report;
}

stimulus exhaustive_stimulus( netlist const& n )
{
  auto const total = n.input_bit_count();
  if ( total > 20 )
    throw error( fmt::format( "exhaustive simulation needs at most 20 input bits, netlist '{}' has {}", n.name, total ) );
  stimulus s;
  for ( auto const& b : n.inputs )
    s.buses.push_back( b.name );
  for ( std::uint64_t v = 0; v < ( std::uint64_t{ 1 } << total ); ++v )
  {
    std::vector<std::int64_t> row;
    std::size_t offset = 0;
    for ( auto const& b : n.inputs )
    {
      auto const raw = ( v >> offset ) & ( ( std::uint64_t{ 1 } << b.width() ) - 1 );
      row.push_back( decode( raw, b.width(), b.is_signed ) );
      offset += b.width();
    }
    s.rows.push_back( std::move( row ) );
  }
  return s;
}

equiv_report check_equiv_exhaustive( netlist const& n, cell_library const& lib, oracle_fn const& oracle )
{
  return check_equiv( n, lib, oracle, exhaustive_stimulus( n ) );
}

power_report power( netlist const& n, activity_profile const& a, cell_library const& lib )
{
  if ( a.num_nets() != n.num_nets )
    throw error( fmt::format( "power: profile covers {} nets but netlist '{}' has {}", a.num_nets(), n.name, n.num_nets ) );
  std::vector<double> load( n.num_nets, 0.0 );
  power_report r;
  for ( auto const& g : n.gates )
  {
    auto const& c = lib.at( g.cell );
    for ( auto in : g.inputs )
      load[in] += c.input_cap;
    r.static_power += c.leakage;
  }
  for ( net_id net = 0; net < n.num_nets; ++net )
  {
    if ( load[net] > 0.0 )
      r.dynamic += a.toggle_rate( net ) * load[net];
  }
  r.total = r.dynamic + r.static_power;
  return r;
}

} // namespace bespoke
