#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "bespoke/cell_library.hpp"
#include "bespoke/netlist.hpp"
#include "bespoke/pipeline.hpp"
#include "bespoke/sim.hpp"

namespace test
{

inline std::filesystem::path fixture_dir()
{
  return BESPOKE_FIXTURE_DIR;
}

inline std::filesystem::path fixture_config( std::string const& model )
{
  return fixture_dir() / ( "redwine_" + model + ".config.json" );
}

inline std::vector<std::string> const& fixture_models()
{
  static std::vector<std::string> const names{ "mlp_c", "mlp_r", "svm_c", "svm_r" };
  return names;
}

inline std::filesystem::path scratch_dir( std::string const& name )
{
  auto const dir = std::filesystem::temp_directory_path() / ( "bespoke_test_" + name );
  std::filesystem::remove_all( dir );
  std::filesystem::create_directories( dir );
  return dir;
}

/* Random DAG over the library's cells, with occasional constant and repeated inputs. */
inline bespoke::netlist random_netlist( std::mt19937_64& rng, bespoke::cell_library const& lib, unsigned input_bits,
                                        std::size_t gates, std::size_t outputs )
{
  using namespace bespoke;
  netlist n;
  n.name = "random";
  std::vector<net_id> pool;
  unsigned remaining = input_bits;
  for ( int b = 0; remaining > 0; ++b )
  {
    unsigned const w = std::min<unsigned>( remaining, 1 + static_cast<unsigned>( rng() % 4 ) );
    remaining -= w;
    n.inputs.push_back( bus{ "i" + std::to_string( b ), n.add_nets( w ), false } );
    pool.insert( pool.end(), n.inputs.back().bits.begin(), n.inputs.back().bits.end() );
  }
  auto const& cells = lib.cells();
  for ( std::size_t g = 0; g < gates; ++g )
  {
    auto const& c = cells[rng() % cells.size()];
    std::vector<net_id> ins;
    for ( unsigned p = 0; p < c.arity; ++p )
    {
      auto const r = rng() % 20;
      if ( r == 0 )
        ins.push_back( const_net( rng() % 2 ) );
      else if ( r == 1 && !ins.empty() )
        ins.push_back( ins.back() );
      else
      {
        // bias toward recent nets so the DAG gets depth
        auto const span = std::min<std::size_t>( pool.size(), 12 );
        ins.push_back( rng() % 3 ? pool[pool.size() - 1 - rng() % span] : pool[rng() % pool.size()] );
      }
    }
    auto const out = n.add_net();
    n.add_gate( c.name, ins, out );
    pool.push_back( out );
  }
  for ( std::size_t o = 0; o < outputs; ++o )
  {
    bus b{ "o" + std::to_string( o ), {}, rng() % 2 == 0 };
    auto const w = 1 + rng() % 4;
    for ( std::size_t i = 0; i < w; ++i )
      b.bits.push_back( rng() % 16 == 0 ? const_net( rng() % 2 ) : pool[rng() % pool.size()] );
    n.outputs.push_back( b );
  }
  return n;
}

/* Naive oracle: recursive evaluation of each output bit from its driver, one vector at a time. */
inline std::vector<std::int64_t> recursive_eval( bespoke::netlist const& n, bespoke::cell_library const& lib,
                                                 std::vector<std::int64_t> const& input_values )
{
  using namespace bespoke;
  std::vector<int> value( n.num_nets, -1 );
  value[const0_net] = 0;
  value[const1_net] = 1;
  for ( std::size_t b = 0; b < n.inputs.size(); ++b )
  {
    for ( std::size_t i = 0; i < n.inputs[b].bits.size(); ++i )
      value[n.inputs[b].bits[i]] = static_cast<int>( ( input_values[b] >> i ) & 1 );
  }
  std::vector<gate const*> driver( n.num_nets, nullptr );
  for ( auto const& g : n.gates )
    driver[g.output] = &g;
  std::function<int( net_id )> eval = [&]( net_id id ) -> int {
    if ( value[id] >= 0 )
      return value[id];
    auto const* g = driver[id];
    unsigned m = 0;
    for ( std::size_t p = 0; p < g->inputs.size(); ++p )
      m |= static_cast<unsigned>( eval( g->inputs[p] ) ) << p;
    return value[id] = ( lib.at( g->cell ).truth_table >> m ) & 1u;
  };
  std::vector<std::int64_t> out;
  for ( auto const& b : n.outputs )
  {
    std::int64_t v = 0;
    for ( std::size_t i = 0; i < b.bits.size(); ++i )
      v |= static_cast<std::int64_t>( eval( b.bits[i] ) ) << i;
    if ( b.is_signed && ( v >> ( b.bits.size() - 1 ) ) & 1 )
      v -= std::int64_t{ 1 } << b.bits.size();
    out.push_back( v );
  }
  return out;
}

inline bespoke::stimulus random_stimulus( std::mt19937_64& rng, bespoke::netlist const& n, std::size_t count )
{
  bespoke::stimulus s;
  for ( auto const& b : n.inputs )
    s.buses.push_back( b.name );
  for ( std::size_t v = 0; v < count; ++v )
  {
    std::vector<std::int64_t> row;
    for ( auto const& b : n.inputs )
    {
      auto const raw = static_cast<std::int64_t>( rng() & ( ( std::uint64_t{ 1 } << b.width() ) - 1 ) );
      row.push_back( b.is_signed && ( raw >> ( b.width() - 1 ) ) ? raw - ( std::int64_t{ 1 } << b.width() ) : raw );
    }
    s.rows.push_back( row );
  }
  return s;
}

/* Random real model of the given kind: up to 6 features, 2..4 classes, up to 4 hidden neurons. */
inline bespoke::real_model random_real_model( std::mt19937_64& rng, bespoke::model_kind kind )
{
  using namespace bespoke;
  std::uniform_real_distribution<double> w( -2.0, 2.0 );
  real_model m;
  m.kind = kind;
  m.n_features = 1 + static_cast<int>( rng() % 6 );
  m.n_classes = is_classifier( kind ) ? 2 + static_cast<int>( rng() % 3 ) : 1;
  auto vec = [&]( std::size_t n ) {
    std::vector<double> v( n );
    for ( auto& x : v )
      x = w( rng );
    return v;
  };
  if ( is_mlp( kind ) )
  {
    std::size_t const hidden = 1 + rng() % 4;
    real_layer h{ {}, vec( hidden ), activation::relu };
    for ( std::size_t j = 0; j < hidden; ++j )
      h.weights.push_back( vec( static_cast<std::size_t>( m.n_features ) ) );
    std::size_t const outs = kind == model_kind::mlp_c ? static_cast<std::size_t>( m.n_classes ) : 1;
    real_layer o{ {}, vec( outs ), activation::none };
    for ( std::size_t k = 0; k < outs; ++k )
      o.weights.push_back( vec( hidden ) );
    m.layers = { h, o };
  }
  else if ( kind == model_kind::svm_c )
  {
    for ( int i = 0; i < m.n_classes; ++i )
    {
      for ( int j = i + 1; j < m.n_classes; ++j )
        m.classifiers.push_back( { vec( static_cast<std::size_t>( m.n_features ) ), w( rng ), std::pair{ i, j } } );
    }
  }
  else
    m.classifiers.push_back( { vec( static_cast<std::size_t>( m.n_features ) ), w( rng ), std::nullopt } );
  return m;
}

/* Highest output bit each gate reaches, by forward search from the gate. */
inline std::vector<int> reach_oracle( bespoke::netlist const& n, std::vector<bespoke::bus> const& roots )
{
  using namespace bespoke;
  std::vector<std::vector<std::size_t>> readers( n.num_nets );
  for ( std::size_t i = 0; i < n.gates.size(); ++i )
  {
    for ( auto in : n.gates[i].inputs )
      readers[in].push_back( i );
  }
  std::vector<int> bit_of( n.num_nets, -1 );
  for ( auto const& b : roots )
  {
    for ( std::size_t i = 0; i < b.bits.size(); ++i )
      bit_of[b.bits[i]] = std::max( bit_of[b.bits[i]], static_cast<int>( i ) );
  }
  std::vector<int> out;
  for ( auto const& g : n.gates )
  {
    int best = -1;
    std::vector<bool> seen( n.num_nets, false );
    std::vector<net_id> stack{ g.output };
    while ( !stack.empty() )
    {
      auto const net = stack.back();
      stack.pop_back();
      if ( seen[net] )
        continue;
      seen[net] = true;
      best = std::max( best, bit_of[net] );
      for ( auto r : readers[net] )
        stack.push_back( n.gates[r].output );
    }
    out.push_back( best );
  }
  return out;
}

} // namespace test
