#include <doctest.h>

#include <random>

#include "bespoke/dse.hpp"
#include "bespoke/error.hpp"
#include "bespoke/json_util.hpp"
#include "bespoke/pipeline.hpp"
#include "helpers.hpp"

using namespace bespoke;

namespace
{

design_point point( double accuracy, double area, stage kind = stage::cross, int phi = 0 )
{
  design_point p;
  p.kind = kind;
  p.e = 4;
  p.tau_c = 0.9;
  p.phi_c = phi;
  p.accuracy = accuracy;
  p.area = area;
  p.normalized_area = area;
  return p;
}

bool front_is_valid( std::vector<design_point> const& all, std::vector<design_point> const& front )
{
  for ( auto const& f : front )
  {
    for ( auto const& p : all )
    {
      if ( dominates( p, f ) )
        return false;
    }
  }
  // every non-dominated point is represented on the front by an equal-valued member
  for ( auto const& p : all )
  {
    bool dominated = false;
    for ( auto const& q : all )
      dominated = dominated || dominates( q, p );
    if ( dominated )
      continue;
    bool found = false;
    for ( auto const& f : front )
      found = found || ( f.accuracy == p.accuracy && f.normalized_area == p.normalized_area );
    if ( !found )
      return false;
  }
  return true;
}

struct fixture_inputs
{
  run_config config;
  prepared_run run;
  eval_data data;
};

fixture_inputs load_fixture( std::string const& name )
{
  auto c = load_config( test::fixture_config( name ) );
  auto p = prepare( c );
  auto d = make_eval_data( p, c );
  return { std::move( c ), std::move( p ), std::move( d ) };
}

} // namespace

TEST_CASE( "pareto examples" )
{
  std::vector<design_point> const pts{ point( 0.9, 1.0, stage::exact ), point( 0.9, 0.5 ), point( 0.8, 0.4 ),
                                       point( 0.8, 0.6 ), point( 0.95, 0.9 ), point( 0.7, 0.4 ) };
  auto const front = pareto( pts );
  REQUIRE( front.size() == 3 );
  CHECK( front[0].accuracy == 0.95 );
  CHECK( front[1].normalized_area == 0.5 );
  CHECK( front[2].normalized_area == 0.4 );
  CHECK( front[2].accuracy == 0.8 );
  CHECK( pareto( std::vector<design_point>{} ).empty() );

  SUBCASE( "equal points collapse to the smallest configuration" )
  {
    std::vector<design_point> const ties{ point( 0.9, 0.5, stage::cross, 5 ), point( 0.9, 0.5, stage::cross, 2 ) };
    auto const f = pareto( ties );
    REQUIRE( f.size() == 1 );
    CHECK( f[0].phi_c == 2 );
  }
}

TEST_CASE( "pareto fronts pass quadratic non-domination checks" )
{
  std::mt19937_64 rng( 6 );
  for ( int t = 0; t < 200; ++t )
  {
    std::vector<design_point> pts;
    for ( std::size_t i = 0, n = 1 + rng() % 40; i < n; ++i )
      pts.push_back( point( static_cast<double>( rng() % 20 ) / 20.0, static_cast<double>( rng() % 20 ) / 20.0,
                            stage::cross, static_cast<int>( i ) ) );
    CHECK( front_is_valid( pts, pareto( pts ) ) );
  }
}

TEST_CASE( "best_under_budget" )
{
  std::vector<design_point> const front{ point( 0.95, 0.9 ), point( 0.9, 0.5 ), point( 0.8, 0.4 ) };
  CHECK( best_under_budget( front, 0.91, 0.01 )->normalized_area == 0.5 );
  CHECK( best_under_budget( front, 0.95, 0.0 )->normalized_area == 0.9 );
  CHECK( best_under_budget( front, 0.95, 0.2 )->normalized_area == 0.4 );
  CHECK( !best_under_budget( front, 0.99, 0.0 ) );
}

TEST_CASE( "reports" )
{
  CHECK( report_csv( std::vector<design_point>{} ) ==
         "stage,e,tau_c,phi_c,accuracy,area,normalized_area,power,normalized_power,gates,netlist_path\n" );

  std::vector<design_point> pts{ point( 0.5, 0.25 ), point( 0.75, 1.0, stage::exact ) };
  pts[1].tau_c.reset();
  pts[1].phi_c.reset();
  pts[1].e = 0;
  pts[0].pruned = { 3, 9 };
  auto const csv = report_csv( pts );
  CHECK( std::count( csv.begin(), csv.end(), '\n' ) == 3 );
  CHECK( csv.find( "exact,0,,,0.75,1,1," ) != std::string::npos );

  auto const j = report_json( pts, pareto( pts ) );
  CHECK( points_from_report( nlohmann::json::parse( j.dump() ) ) == pts );
  CHECK( j["front"].size() == 2 );
  CHECK_THROWS_AS( points_from_report( nlohmann::json{ { "format", "other" } } ), data_error );

  CHECK( pts[0].label() == "cross_e4_t90_p0" );
  CHECK( pts[1].label() == "exact" );
  for ( auto k : { stage::exact, stage::coeff_only, stage::prune_only, stage::cross } )
    CHECK( stage_from_string( to_string( k ) ) == k );
  CHECK_THROWS_AS( stage_from_string( "bogus" ), data_error );

  auto const dir = test::scratch_dir( "reports" );
  write_report( pts, pareto( pts ), dir );
  for ( auto const* f : { "report.csv", "front.csv", "report.json", "plot.dat" } )
    CHECK( std::filesystem::exists( dir / f ) );
}

TEST_CASE( "default tau grid" )
{
  auto const g = default_tau_grid();
  REQUIRE( g.size() == 20 );
  CHECK( g.front() == 0.80 );
  CHECK( g.back() == 0.99 );
}

TEST_CASE( "a circuit without gates explores to its two baseline points" )
{
  auto f = load_fixture( "svm_r" );
  auto q = f.run.model;
  for ( auto& w : q.layers[0].sums[0].weights )
    w = 0;
  q.layers[0].sums[0].weights[0] = 64;
  q.layers[0].sums[0].intercept = 0;
  area_cache cache( f.run.lib );
  auto const x = explore_cross( q, 2, f.data, cache, {} );
  REQUIRE( x.points.size() == 2 );
  CHECK( x.points[0].kind == stage::exact );
  CHECK( x.points[1].kind == stage::coeff_only );
  CHECK( x.points[0].area == 0.0 );
  CHECK( x.points[1].normalized_area == 1.0 );
}

TEST_CASE( "explore on the fixtures" )
{
  for ( auto const& m : test::fixture_models() )
  {
    CAPTURE( m );
    auto f = load_fixture( m );
    area_cache cache( f.run.lib );
    auto const x = explore_cross( f.run.model, 4, f.data, cache, {} );
    auto const& exact = x.points[0];
    auto const& coeff = x.points[1];

    // exact accuracy equals the golden model's
    std::vector<std::int64_t> decisions;
    for ( auto const& row : f.run.test_x )
      decisions.push_back( golden_infer( f.run.model, row ).decision );
    CHECK( exact.accuracy == accuracy( f.run.model, decisions, f.data.test_labels ) );
    CHECK( exact.normalized_area == 1.0 );
    CHECK( coeff.normalized_area < 1.0 );

    for ( auto const& p : x.points )
    {
      if ( p.kind == stage::cross )
        CHECK( p.area <= coeff.area );
      if ( p.kind == stage::prune_only )
        CHECK( p.area <= exact.area );
    }
    CHECK( front_is_valid( x.points, pareto( x.points ) ) );

    // materialized netlists reproduce the recorded metrics
    for ( std::size_t i = 0; i < x.points.size(); i += 7 )
    {
      auto const& p = x.points[i];
      auto const n = materialize( p, x, f.run.lib );
      CHECK( area( n, f.run.lib ).total_area == p.area );
    }

    auto const best = best_under_budget( pareto( x.points ), exact.accuracy, 0.0 );
    REQUIRE( best );
    CHECK( best->accuracy >= exact.accuracy );
  }
}

TEST_CASE( "e=0 makes the coefficient stage a copy of the exact one" )
{
  auto f = load_fixture( "svm_r" );
  area_cache cache( f.run.lib );
  auto const x = explore_cross( f.run.model, 0, f.data, cache, {} );
  CHECK( x.points[1].area == x.points[0].area );
  CHECK( x.points[1].accuracy == x.points[0].accuracy );
  std::vector<design_point> prune_only, cross;
  for ( auto const& p : x.points )
  {
    if ( p.kind == stage::prune_only )
      prune_only.push_back( p );
    if ( p.kind == stage::cross )
      cross.push_back( p );
  }
  REQUIRE( prune_only.size() == cross.size() );
  for ( std::size_t i = 0; i < cross.size(); ++i )
  {
    CHECK( cross[i].area == prune_only[i].area );
    CHECK( cross[i].accuracy == prune_only[i].accuracy );
  }
}

TEST_CASE( "exploration reports do not depend on the thread count" )
{
  auto f = load_fixture( "mlp_r" );
  area_cache cache( f.run.lib );
  auto run = [&]( int threads ) {
    explore_options opts;
    opts.threads = threads;
    auto const x = explore_cross( f.run.model, 3, f.data, cache, opts );
    return report_json( x.points, pareto( x.points ) ).dump() + report_csv( x.points );
  };
  CHECK( run( 1 ) == run( 4 ) );
}
