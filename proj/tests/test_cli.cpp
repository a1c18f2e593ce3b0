#include <doctest.h>

#include <array>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "bespoke/json_util.hpp"
#include "helpers.hpp"

namespace
{

struct run_result
{
  int status;
  std::string out;
};

run_result run( std::string const& args )
{
  std::string const cmd = std::string( BESPOKE_CLI ) + " " + args + " 2>&1";
  FILE* pipe = popen( cmd.c_str(), "r" );
  REQUIRE( pipe );
  std::string out;
  std::array<char, 4096> buf{};
  while ( auto const n = fread( buf.data(), 1, buf.size(), pipe ) )
    out.append( buf.data(), n );
  int const status = pclose( pipe );
  return { WIFEXITED( status ) ? WEXITSTATUS( status ) : -1, out };
}

std::string slurp( std::filesystem::path const& p )
{
  std::ifstream in( p, std::ios::binary );
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string config( std::string const& model )
{
  return "--config " + test::fixture_config( model ).string();
}

} // namespace

TEST_CASE( "usage errors exit with 1" )
{
  CHECK( run( "" ).status == 1 );
  CHECK( run( "frobnicate" ).status == 1 );
  CHECK( run( "synth --no-such-flag" ).status == 1 );
  CHECK( run( "prune " + config( "svm_r" ) + " --tau 0.3 --phi 2" ).status == 1 );
  CHECK( run( "pareto /nonexistent/report.json" ).status == 1 );
  CHECK( run( "--help" ).status == 0 );
}

TEST_CASE( "data errors exit with 2 and name the problem" )
{
  auto const dir = test::scratch_dir( "cli_errors" );
  auto const r = run( "synth " + config( "svm_r" ) + " --model /nonexistent/model.json -o " + dir.string() );
  CHECK( r.status == 2 );
  CHECK( r.out.find( "model.json" ) != std::string::npos );

  bespoke::write_text_file( dir / "bad.v", "module m (a);\n  input [0:0] a;\n  garbage\nendmodule\n" );
  auto const e = run( "eval " + config( "svm_r" ) + " --netlist " + ( dir / "bad.v" ).string() + " -o " + dir.string() );
  CHECK( e.status == 2 );
  CHECK( e.out.find( "line 3" ) != std::string::npos );
}

TEST_CASE( "area-table lists every coefficient" )
{
  auto const r = run( "area-table --input-bits 4 --coeff-bits 8" );
  REQUIRE( r.status == 0 );
  std::istringstream in( r.out );
  std::string line;
  int rows = 0;
  while ( std::getline( in, line ) )
  {
    if ( !line.empty() && line[0] != '#' )
      ++rows;
  }
  CHECK( rows == 256 );
  CHECK( r.out.find( "\n64 0\n" ) != std::string::npos );
}

TEST_CASE( "synth, eval, prune and coeff-approx write their outputs" )
{
  auto const dir = test::scratch_dir( "cli_synth" );
  auto const s = run( "synth " + config( "svm_r" ) + " -o " + dir.string() );
  REQUIRE( s.status == 0 );
  CHECK( s.out.find( "golden mismatches 0" ) != std::string::npos );
  for ( auto const* f : { "netlist.json", "netlist.v", "model_quantized.json", "area.json", "manifest.json" } )
    CHECK( std::filesystem::exists( dir / f ) );
  auto const manifest = bespoke::read_json_file( dir / "manifest.json" );
  CHECK( manifest["command"] == "synth" );
  CHECK( manifest["seed"] == 42 );

  auto const e = run( "eval " + config( "svm_r" ) + " --netlist " + ( dir / "netlist.v" ).string() + " -o " + dir.string() );
  REQUIRE( e.status == 0 );
  auto const j = nlohmann::json::parse( e.out );
  CHECK( j["accuracy"] == j["golden_accuracy"] );

  CHECK( run( "prune " + config( "svm_r" ) + " --tau 0.9 --phi 4 -o " + dir.string() ).status == 0 );
  CHECK( std::filesystem::exists( dir / "pruned.json" ) );
  CHECK( std::filesystem::exists( dir / "candidates.json" ) );

  CHECK( run( "coeff-approx " + config( "svm_r" ) + " -e 2 -o " + dir.string() ).status == 0 );
  CHECK( bespoke::read_json_file( dir / "model_approx.json" )["provenance"]["e"] == 2 );
}

TEST_CASE( "explore reports are byte-identical across worker counts" )
{
  auto const dir = test::scratch_dir( "cli_explore" );
  REQUIRE( run( "explore " + config( "mlp_r" ) + " -j 1 -o " + dir.string() ).status == 0 );
  auto const csv = slurp( dir / "report.csv" );
  auto const json = slurp( dir / "report.json" );
  REQUIRE( run( "explore " + config( "mlp_r" ) + " -j 3 -o " + dir.string() ).status == 0 );
  CHECK( slurp( dir / "report.csv" ) == csv );
  CHECK( slurp( dir / "report.json" ) == json );
  CHECK( std::filesystem::exists( dir / "netlists" / "exact.json" ) );

  auto const p = run( "pareto " + ( dir / "report.json" ).string() );
  REQUIRE( p.status == 0 );
  CHECK( p.out == slurp( dir / "front.csv" ) );
}
