#include <doctest.h>

#include <random>

#include "bespoke/error.hpp"
#include "bespoke/hdl.hpp"
#include "bespoke/json_util.hpp"
#include "bespoke/netlist.hpp"
#include "bespoke/optimize.hpp"
#include "bespoke/sim.hpp"
#include "bespoke/synth.hpp"
#include "helpers.hpp"

using namespace bespoke;

namespace
{

cell_library const lib = cell_library::default_library();

bool mentions( diagnostics const& d, std::string const& text )
{
  return std::any_of( d.messages.begin(), d.messages.end(), [&]( auto const& m ) { return m.find( text ) != std::string::npos; } );
}

/* a + b over `width` bits, ripple carry, unsigned output of width + 1 */
netlist ripple_adder( unsigned width )
{
  netlist n;
  n.inputs.push_back( { "a", n.add_nets( width ), false } );
  n.inputs.push_back( { "b", n.add_nets( width ), false } );
  net_id carry = const0_net;
  bus s{ "s", {}, false };
  for ( unsigned i = 0; i < width; ++i )
  {
    auto const a = n.inputs[0].bits[i], b = n.inputs[1].bits[i];
    auto const p = n.add_net();
    n.add_gate( "XOR2", { a, b }, p );
    auto const sum = n.add_net();
    n.add_gate( "XOR2", { p, carry }, sum );
    auto const next = n.add_net();
    n.add_gate( "MUX2", { a, carry, p }, next );
    s.bits.push_back( sum );
    carry = next;
  }
  s.bits.push_back( carry );
  n.outputs.push_back( s );
  return n;
}

} // namespace

TEST_CASE( "the default library is complete and hashes stably" )
{
  CHECK( lib.cells().size() == 8 );
  CHECK( lib.at( "INV" ).area == 1.0 );
  CHECK( lib.at( "MUX2" ).area == 3.5 );
  CHECK( lib.at( "XOR2" ).input_cap == doctest::Approx( 0.6 ) );
  CHECK( lib.hash() == cell_library::default_library().hash() );
  CHECK( cell_library_from_json( to_json( lib ) ).cells() == lib.cells() );

  auto cells = lib.cells();
  cells.pop_back();
  CHECK_THROWS_AS( cell_library( "partial", cells ), data_error );
  auto dup = lib.cells();
  dup.push_back( dup.front() );
  CHECK_THROWS_AS( cell_library( "dup", dup ), data_error );
  CHECK_THROWS_AS( load_cell_library( "/nonexistent/lib.json" ), data_error );

  auto cheap = lib.cells();
  cheap[0].area = 0.5;
  CHECK( cell_library( "cheap", cheap ).hash() != lib.hash() );
}

TEST_CASE( "validate reports structural problems" )
{
  SUBCASE( "input wired to output is fine" )
  {
    netlist n;
    n.inputs.push_back( { "a", n.add_nets( 1 ), false } );
    n.outputs.push_back( { "y", n.inputs[0].bits, false } );
    CHECK( validate( n, &lib ).ok() );
  }
  SUBCASE( "two-gate cycle names both gates" )
  {
    netlist n;
    n.inputs.push_back( { "a", n.add_nets( 1 ), false } );
    auto const x = n.add_net(), y = n.add_net();
    n.add_gate( "AND2", { n.inputs[0].bits[0], y }, x );
    n.add_gate( "INV", { x }, y );
    n.outputs.push_back( { "o", { y }, false } );
    auto const d = validate( n, &lib );
    REQUIRE( mentions( d, "cycle" ) );
    CHECK( ( mentions( d, "gates 0, 1" ) || mentions( d, "gates 1, 0" ) ) );
    CHECK_THROWS_AS( levelize( n ), error );
  }
  SUBCASE( "net with two drivers" )
  {
    netlist n;
    n.inputs.push_back( { "a", n.add_nets( 1 ), false } );
    auto const x = n.add_net();
    n.add_gate( "INV", { n.inputs[0].bits[0] }, x );
    n.add_gate( "INV", { n.inputs[0].bits[0] }, x );
    n.outputs.push_back( { "o", { x }, false } );
    CHECK( mentions( validate( n ), "multiple drivers" ) );
  }
  SUBCASE( "arity, unknown cell, undriven net" )
  {
    netlist n;
    n.inputs.push_back( { "a", n.add_nets( 1 ), false } );
    auto const x = n.add_net(), y = n.add_net(), floating = n.add_net();
    n.add_gate( "AND2", { n.inputs[0].bits[0] }, x );
    n.add_gate( "FOO", { floating }, y );
    n.outputs.push_back( { "o", { x, y }, false } );
    auto const d = validate( n, &lib );
    CHECK( mentions( d, "arity" ) );
    CHECK( mentions( d, "unknown cell" ) );
    CHECK( mentions( d, "no driver" ) );
  }
  SUBCASE( "classifier metadata" )
  {
    netlist n;
    n.role = circuit_role::classifier;
    n.inputs.push_back( { "a", n.add_nets( 1 ), false } );
    n.outputs.push_back( { "class", n.inputs[0].bits, false } );
    CHECK( !validate( n ).ok() );
    n.role = circuit_role::regressor;
    n.tracked.push_back( { "O0", n.inputs[0].bits, false } );
    CHECK( !validate( n ).ok() );
  }
  SUBCASE( "at most ten messages" )
  {
    netlist n;
    for ( int i = 0; i < 30; ++i )
      n.add_gate( "INV", { 999 }, n.add_net() );
    CHECK( validate( n ).messages.size() == 10 );
  }
}

TEST_CASE( "levelize orders gates after their drivers" )
{
  SUBCASE( "chain" )
  {
    netlist n;
    n.inputs.push_back( { "a", n.add_nets( 1 ), false } );
    // ids assigned out of topological order: gate 3 feeds gate 1 feeds gate 2
    auto const a = n.inputs[0].bits[0];
    auto const x = n.add_net(), y = n.add_net(), z = n.add_net();
    n.gates.push_back( { 1, "INV", { x }, y } );
    n.gates.push_back( { 2, "INV", { y }, z } );
    n.gates.push_back( { 3, "INV", { a }, x } );
    n.outputs.push_back( { "o", { z }, false } );
    CHECK( levelize( n ) == std::vector<gate_id>{ 3, 1, 2 } );
  }
  SUBCASE( "diamond" )
  {
    netlist n;
    n.inputs.push_back( { "a", n.add_nets( 1 ), false } );
    auto const s = n.add_net(), l = n.add_net(), r = n.add_net(), t = n.add_net();
    n.add_gate( "INV", { n.inputs[0].bits[0] }, s );
    n.add_gate( "INV", { s }, l );
    n.add_gate( "INV", { s }, r );
    n.add_gate( "AND2", { l, r }, t );
    n.outputs.push_back( { "o", { t }, false } );
    CHECK( levelize( n ) == std::vector<gate_id>{ 0, 1, 2, 3 } );
  }
}

TEST_CASE( "optimizer rewrite examples" )
{
  SUBCASE( "AND with constant one forwards" )
  {
    netlist n;
    n.inputs.push_back( { "x", n.add_nets( 1 ), false } );
    auto const y = n.add_net();
    n.add_gate( "AND2", { n.inputs[0].bits[0], const1_net }, y );
    n.outputs.push_back( { "y", { y }, false } );
    auto const o = optimize( n, lib );
    CHECK( o.gates.empty() );
    CHECK( o.outputs[0].bits[0] == n.inputs[0].bits[0] );
  }
  SUBCASE( "XOR of a net with itself is zero" )
  {
    netlist n;
    n.inputs.push_back( { "x", n.add_nets( 1 ), false } );
    auto const y = n.add_net();
    n.add_gate( "XOR2", { n.inputs[0].bits[0], n.inputs[0].bits[0] }, y );
    n.outputs.push_back( { "y", { y }, false } );
    auto const o = optimize( n, lib );
    CHECK( o.gates.empty() );
    CHECK( o.outputs[0].bits[0] == const0_net );
  }
  SUBCASE( "double inverter and structural hashing" )
  {
    netlist n;
    n.inputs.push_back( { "x", n.add_nets( 2 ), false } );
    auto const a = n.inputs[0].bits[0], b = n.inputs[0].bits[1];
    auto const i1 = n.add_net(), i2 = n.add_net(), g1 = n.add_net(), g2 = n.add_net();
    n.add_gate( "INV", { a }, i1 );
    n.add_gate( "INV", { i1 }, i2 );
    n.add_gate( "NAND2", { a, b }, g1 );
    n.add_gate( "NAND2", { b, a }, g2 );
    n.outputs.push_back( { "y", { i2, g1, g2 }, false } );
    optimize_stats st;
    auto const o = optimize( n, lib, &st );
    CHECK( o.outputs[0].bits[0] == a );
    CHECK( o.outputs[0].bits[1] == o.outputs[0].bits[2] );
    CHECK( o.gates.size() == 1 );
    CHECK( st.inverters == 1 );
    CHECK( st.merged == 1 );
  }
  SUBCASE( "MUX with a constant data input becomes a cheaper gate" )
  {
    netlist n;
    n.inputs.push_back( { "x", n.add_nets( 2 ), false } );
    auto const y = n.add_net();
    n.add_gate( "MUX2", { const0_net, n.inputs[0].bits[0], n.inputs[0].bits[1] }, y );
    n.outputs.push_back( { "y", { y }, false } );
    auto const o = optimize( n, lib );
    REQUIRE( o.gates.size() == 1 );
    CHECK( o.gates[0].cell == "AND2" );
  }
  SUBCASE( "adder with a zero operand is wiring" )
  {
    auto n = ripple_adder( 4 );
    auto const b = n.inputs[1];
    // feed constant zero into b by rewiring every reader of b
    for ( auto& g : n.gates )
    {
      for ( auto& in : g.inputs )
      {
        if ( std::find( b.bits.begin(), b.bits.end(), in ) != b.bits.end() )
          in = const0_net;
      }
    }
    auto const o = optimize( n, lib );
    CHECK( area( o, lib ).total_area == 0.0 );
    auto const r = check_equiv_exhaustive( o, lib, []( auto x ) { return std::vector<std::int64_t>{ x[0] }; } );
    CHECK( r.equivalent() );
  }
}

TEST_CASE( "tie_to_const examples" )
{
  netlist n;
  n.inputs.push_back( { "x", n.add_nets( 2 ), false } );
  auto const a = n.inputs[0].bits[0], b = n.inputs[0].bits[1];
  auto const g = n.add_net(), h = n.add_net();
  n.add_gate( "AND2", { a, b }, g );
  n.add_gate( "OR2", { g, a }, h );
  n.outputs.push_back( { "y", { h }, false } );

  SUBCASE( "tying the output driver" )
  {
    auto const t = tie_to_const( n, 1, true );
    CHECK( validate( t, &lib ).ok() );
    auto const r = check_equiv_exhaustive( t, lib, []( auto ) { return std::vector<std::int64_t>{ 1 }; } );
    CHECK( r.equivalent() );
  }
  SUBCASE( "tying an internal gate never adds gates after optimizing" )
  {
    auto const t = optimize( tie_to_const( n, 0, false ), lib );
    CHECK( t.gates.size() <= optimize( n, lib ).gates.size() );
  }
  SUBCASE( "a gate constant under the stimulus leaves simulation unchanged" )
  {
    stimulus s{ { "x" }, { { 0 }, { 1 }, { 2 } } }; // AND2 never sees both bits set
    auto const t = tie_to_const( n, 0, false );
    CHECK( simulate( t, lib, s ) == simulate( n, lib, s ) );
  }
  CHECK_THROWS_AS( tie_to_const( n, 42, false ), error );
}

TEST_CASE( "area accounting" )
{
  CHECK( area( netlist{}, lib ).total_area == 0.0 );
  netlist n;
  n.inputs.push_back( { "x", n.add_nets( 1 ), false } );
  net_id prev = n.inputs[0].bits[0];
  for ( int i = 0; i < 3; ++i )
  {
    auto const o = n.add_net();
    n.add_gate( "INV", { prev }, o );
    prev = o;
  }
  n.outputs.push_back( { "y", { prev }, false } );
  auto const a = area( n, lib );
  CHECK( a.total_area == 3.0 );
  CHECK( a.gate_count == 3 );
  CHECK( a.cell_counts.at( "INV" ) == 3 );

  n.gates[0].cell = "BOGUS";
  CHECK_THROWS_AS( area( n, lib ), error );

  auto const conv = area( gen_conventional_mult( 4, 8, lib ), lib );
  CHECK( conv.total_area > area_bm( 127, 4, lib ) );
}

TEST_CASE( "JSON netlists round-trip and report bad references" )
{
  std::mt19937_64 rng( 21 );
  auto const dir = test::scratch_dir( "netlist_json" );
  for ( int t = 0; t < 20; ++t )
  {
    auto const n = test::random_netlist( rng, lib, 6, 30, 2 );
    save_netlist( n, dir / "n.json" );
    CHECK( load_netlist( dir / "n.json" ) == n );
  }
  auto j = to_json( test::random_netlist( rng, lib, 4, 5, 1 ) );
  j["gates"][0]["inputs"][0] = 9999;
  try
  {
    netlist_from_json( j );
    FAIL( "expected a data error" );
  }
  catch ( data_error const& e )
  {
    CHECK( std::string( e.what() ).find( "9999" ) != std::string::npos );
  }
  write_text_file( dir / "broken.json", "{\n  \"gates\": [\n" );
  try
  {
    load_netlist( dir / "broken.json" );
    FAIL( "expected a data error" );
  }
  catch ( data_error const& e )
  {
    CHECK( std::string( e.what() ).find( "line" ) != std::string::npos );
  }
}

TEST_CASE( "HDL export and import are simulation-equivalent" )
{
  std::mt19937_64 rng( 4 );
  for ( int t = 0; t < 20; ++t )
  {
    auto const n = test::random_netlist( rng, lib, 8, 10, 2 );
    auto const back = import_hdl( export_hdl( n ) );
    CHECK( back.gates.size() == n.gates.size() );
    auto const s = exhaustive_stimulus( n );
    CHECK( simulate( back, lib, s ) == simulate( n, lib, s ) );
  }

  auto const c = gen_argmax( 3, 3, false, lib );
  auto const back = import_hdl( export_hdl( c ) );
  CHECK( back.decision_gates == c.decision_gates );
  CHECK( back.role == c.role );

  CHECK_THROWS_AS( import_hdl( "module m (a);\n  input [0:0] a;\n  FOO g1 (.A(q[0]), .Y(n5));\nendmodule\n" ), data_error );
  try
  {
    import_hdl( "module m (a);\n  input [0:0] a;\n  always @(*) begin\nendmodule\n" );
    FAIL( "expected a data error" );
  }
  catch ( data_error const& e )
  {
    CHECK( std::string( e.what() ).find( "line 3" ) != std::string::npos );
  }
}

TEST_CASE( "optimize preserves function, is idempotent and never grows area" )
{
  std::mt19937_64 rng( 99 );
  for ( int t = 0; t < 150; ++t )
  {
    auto const bits = 1 + static_cast<unsigned>( rng() % 12 );
    auto const n = test::random_netlist( rng, lib, bits, 5 + rng() % 60, 1 + rng() % 4 );
    REQUIRE( validate( n, &lib ).ok() );
    auto const o = optimize( n, lib );
    CHECK( validate( o, &lib ).ok() );
    auto const s = exhaustive_stimulus( n );
    CHECK( simulate( o, lib, s ) == simulate( n, lib, s ) );
    CHECK( optimize( o, lib ) == o );
    CHECK( area( o, lib ).total_area <= area( n, lib ).total_area );
  }
}
