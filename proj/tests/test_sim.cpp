#include <doctest.h>

#include <random>

#include "bespoke/error.hpp"
#include "bespoke/netlist.hpp"
#include "bespoke/sim.hpp"
#include "bespoke/synth.hpp"
#include "helpers.hpp"

using namespace bespoke;

namespace
{

cell_library const lib = cell_library::default_library();

netlist inverter_chain( unsigned length )
{
  netlist n;
  n.inputs.push_back( { "a", n.add_nets( 1 ), false } );
  net_id prev = n.inputs[0].bits[0];
  for ( unsigned i = 0; i < length; ++i )
  {
    auto const o = n.add_net();
    n.add_gate( "INV", { prev }, o );
    prev = o;
  }
  n.outputs.push_back( { "y", { prev }, false } );
  return n;
}

stimulus single_bus( std::string name, std::vector<std::int64_t> const& values )
{
  stimulus s{ { std::move( name ) }, {} };
  for ( auto v : values )
    s.rows.push_back( { v } );
  return s;
}

} // namespace

TEST_CASE( "inverter chains alternate" )
{
  auto const s = single_bus( "a", { 0, 1, 1, 0 } );
  CHECK( simulate( inverter_chain( 3 ), lib, s ) == word_rows{ { 1 }, { 0 }, { 0 }, { 1 } } );
  CHECK( simulate( inverter_chain( 4 ), lib, s ) == word_rows{ { 0 }, { 1 }, { 1 }, { 0 } } );
}

TEST_CASE( "stimulus binding errors" )
{
  auto const n = inverter_chain( 1 );
  CHECK_THROWS_AS( simulate( n, lib, stimulus{ { "a" }, {} } ), data_error );
  CHECK_THROWS_AS( simulate( n, lib, single_bus( "b", { 0 } ) ), data_error );
  CHECK_THROWS_AS( simulate( n, lib, single_bus( "a", { 2 } ) ), data_error );
  CHECK_THROWS_AS( simulate( n, lib, stimulus{ { "a" }, { { 0, 1 } } } ), data_error );

  netlist wide;
  wide.inputs.push_back( { "x", wide.add_nets( 21 ), false } );
  wide.outputs.push_back( { "y", { wide.inputs[0].bits[0] }, false } );
  CHECK_THROWS_AS( exhaustive_stimulus( wide ), error );
}

TEST_CASE( "signed output decoding" )
{
  netlist n;
  n.inputs.push_back( { "x", n.add_nets( 3 ), true } );
  n.outputs.push_back( { "y", n.inputs[0].bits, true } );
  auto const out = simulate( n, lib, exhaustive_stimulus( n ) );
  std::vector<std::int64_t> values;
  for ( auto const& r : out )
    values.push_back( r[0] );
  CHECK( values == std::vector<std::int64_t>{ 0, 1, 2, 3, -4, -3, -2, -1 } );
}

TEST_CASE( "activity profile examples" )
{
  auto const n = inverter_chain( 1 );
  auto const y = n.outputs[0].bits[0];

  SUBCASE( "constant input" )
  {
    auto const a = profile( n, lib, single_bus( "a", std::vector<std::int64_t>( 100, 0 ) ) );
    CHECK( a.p_one( y ) == 1.0 );
    CHECK( a.toggle_rate( y ) == 0.0 );
    CHECK( a.p_one( const1_net ) == 1.0 );
    CHECK( a.p_one( const0_net ) == 0.0 );
  }
  SUBCASE( "alternating input across block boundaries" )
  {
    std::vector<std::int64_t> v;
    for ( int i = 0; i < 200; ++i )
      v.push_back( i % 2 );
    auto const a = profile( n, lib, single_bus( "a", v ) );
    CHECK( a.p_one( y ) == 0.5 );
    CHECK( a.toggles[y] == 199 );
    CHECK( a.toggle_rate( y ) == 1.0 );
  }
  SUBCASE( "an 85 percent gate" )
  {
    netlist g;
    g.inputs.push_back( { "x", g.add_nets( 2 ), false } );
    auto const o = g.add_net();
    g.add_gate( "OR2", g.inputs[0].bits, o );
    g.outputs.push_back( { "y", { o }, false } );
    std::vector<std::int64_t> v( 85, 1 );
    v.resize( 100, 0 );
    auto const a = profile( g, lib, single_bus( "x", v ) );
    CHECK( a.ones[o] == 85 );
    CHECK( a.p_one( o ) == doctest::Approx( 0.85 ) );
  }
  auto const j = to_json( profile( n, lib, single_bus( "a", { 0, 1 } ) ) );
  CHECK( j["vector_count"] == 2 );
  CHECK( j["nets"][std::to_string( y )]["toggles"] == 1 );
}

TEST_CASE( "check_equiv finds a flipped gate" )
{
  netlist n;
  n.inputs.push_back( { "a", n.add_nets( 4 ), false } );
  n.inputs.push_back( { "b", n.add_nets( 4 ), false } );
  bus s{ "s", {}, false };
  net_id carry = const0_net;
  for ( unsigned i = 0; i < 4; ++i )
  {
    auto const a = n.inputs[0].bits[i], b = n.inputs[1].bits[i];
    auto const p = n.add_net(), sum = n.add_net(), next = n.add_net();
    n.add_gate( "XOR2", { a, b }, p );
    n.add_gate( "XOR2", { p, carry }, sum );
    n.add_gate( "MUX2", { a, carry, p }, next );
    s.bits.push_back( sum );
    carry = next;
  }
  s.bits.push_back( carry );
  n.outputs.push_back( s );

  auto const oracle = []( std::span<std::int64_t const> x ) { return std::vector<std::int64_t>{ x[0] + x[1] }; };
  auto const good = check_equiv_exhaustive( n, lib, oracle );
  CHECK( good.equivalent() );
  CHECK( good.vectors_checked == 256 );

  n.gates[4].cell = "XNOR2";
  auto const bad = check_equiv_exhaustive( n, lib, oracle );
  CHECK( !bad.equivalent() );
  CHECK( bad.mismatch_count == 256 );
  CHECK( bad.mismatches.size() == 16 );
}

TEST_CASE( "power" )
{
  netlist empty;
  empty.inputs.push_back( { "a", empty.add_nets( 1 ), false } );
  empty.outputs.push_back( { "y", empty.inputs[0].bits, false } );
  auto const a = profile( empty, lib, single_bus( "a", { 0, 1, 0 } ) );
  auto const p = power( empty, a, lib );
  CHECK( p.total == 0.0 );

  auto const n = inverter_chain( 4 );
  auto const quiet = power( n, profile( n, lib, single_bus( "a", { 1, 1, 1, 1 } ) ), lib );
  CHECK( quiet.dynamic == 0.0 );
  CHECK( quiet.static_power == doctest::Approx( 4 * lib.at( "INV" ).leakage ) );
  auto const busy = power( n, profile( n, lib, single_bus( "a", { 0, 1, 0, 1 } ) ), lib );
  CHECK( busy.dynamic == doctest::Approx( 4 * lib.at( "INV" ).input_cap ) );
  CHECK( busy.total > quiet.total );
  CHECK_THROWS_AS( power( n, a, lib ), error );
}

TEST_CASE( "parallel simulation matches the serial reference and the recursive oracle" )
{
  std::mt19937_64 rng( 1234 );
  for ( int t = 0; t < 60; ++t )
  {
    auto const n = test::random_netlist( rng, lib, 2 + rng() % 20, 10 + rng() % 200, 1 + rng() % 4 );
    auto const s = test::random_stimulus( rng, n, 1 + rng() % 300 );
    auto const ref = simulate_reference( n, lib, s );
    CHECK( simulate( n, lib, s, 1 ) == ref );
    CHECK( simulate( n, lib, s, 3 ) == ref );
    auto const prof = profile_reference( n, lib, s );
    CHECK( profile( n, lib, s, 1 ) == prof );
    CHECK( profile( n, lib, s, 4 ) == prof );
    for ( std::size_t v = 0; v < std::min<std::size_t>( s.size(), 20 ); ++v )
      CHECK( test::recursive_eval( n, lib, s.rows[v] ) == ref[v] );
  }
}

TEST_CASE( "an inverter's one-probability complements its input's" )
{
  std::mt19937_64 rng( 5 );
  for ( int t = 0; t < 30; ++t )
  {
    auto n = test::random_netlist( rng, lib, 6, 40, 1 );
    auto const src = n.gates[rng() % n.gates.size()].output;
    auto const o = n.add_net();
    n.add_gate( "INV", { src }, o );
    auto const a = profile( n, lib, test::random_stimulus( rng, n, 500 ) );
    CHECK( a.ones[o] + a.ones[src] == a.vector_count );
    CHECK( a.toggles[o] == a.toggles[src] );
  }
}

TEST_CASE( "tracked buses are reported alongside outputs" )
{
  auto const c = gen_argmax( 3, 4, true, lib );
  simulator sim( c, lib );
  std::mt19937_64 rng( 8 );
  auto const s = test::random_stimulus( rng, c, 100 );
  auto const r = sim.run( s, { .threads = 1, .profile = false, .tracked = true } );
  REQUIRE( r.outputs.size() == 100 );
  CHECK( r.tracked.size() == 100 );
}
