#include "bespoke/dse.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <map>
#include <tuple>

#include <fmt/format.h>
#include <omp.h>

#include "bespoke/coeff_approx.hpp"
#include "bespoke/error.hpp"
#include "bespoke/json_util.hpp"

namespace bespoke
{

std::string to_string( stage s )
{
  switch ( s )
  {
  case stage::exact:
    return "exact";
  case stage::coeff_only:
    return "coeff_only";
  case stage::prune_only:
    return "prune_only";
  case stage::cross:
    return "cross";
  }
  return "?";
}

stage stage_from_string( std::string const& s )
{
  for ( auto k : { stage::exact, stage::coeff_only, stage::prune_only, stage::cross } )
  {
    if ( to_string( k ) == s )
      return k;
  }
  throw data_error( fmt::format( "unknown design-point stage '{}'", s ) );
}

std::string design_point::label() const
{
  auto out = to_string( kind );
  if ( kind == stage::coeff_only || kind == stage::cross )
    out += fmt::format( "_e{}", e );
  if ( tau_c )
    out += fmt::format( "_t{}", std::llround( *tau_c * 100.0 ) );
  if ( phi_c )
    out += fmt::format( "_p{}", *phi_c );
  return out;
}

bool config_less( design_point const& a, design_point const& b )
{
  return std::tuple{ a.kind, a.e, a.tau_c.value_or( -1.0 ), a.phi_c.value_or( -2 ) } <
         std::tuple{ b.kind, b.e, b.tau_c.value_or( -1.0 ), b.phi_c.value_or( -2 ) };
}

point_metrics evaluate( netlist const& n, quantized_model const& q, eval_data const& data, cell_library const& lib,
                        int threads )
{
  simulator const sim( n, lib );
  auto const r = sim.run( data.test, sim_options{ threads, true, false } );
  std::vector<std::int64_t> decisions;
  decisions.reserve( r.outputs.size() );
  for ( auto const& row : r.outputs )
    decisions.push_back( row.at( 0 ) );
  auto const a = area( n, lib );
  auto const activity = data.power.rows.empty() ? r.profile : sim.run( data.power, sim_options{ threads, true, false } ).profile;
  return point_metrics{ accuracy( q, decisions, data.test_labels ), a.total_area, power( n, activity, lib ).total,
                        a.gate_count };
}

std::vector<double> default_tau_grid()
{
  std::vector<double> grid;
  for ( int p = 80; p <= 99; ++p )
    grid.push_back( p / 100.0 );
  return grid;
}

namespace
{

template<typename Fn>
void parallel_for( std::size_t count, int threads, Fn&& fn )
{
  std::exception_ptr failure;
  int const t = threads > 0 ? threads : omp_get_max_threads();
#pragma omp parallel for schedule( dynamic ) num_threads( t )
  for ( std::size_t i = 0; i < count; ++i )
  {
    try
    {
      fn( i );
    }
    catch ( ... )
    {
#pragma omp critical
      if ( !failure )
        failure = std::current_exception();
    }
  }
  if ( failure )
    std::rethrow_exception( failure );
}

design_point measured( stage kind, int e, point_metrics const& m )
{
  design_point p;
  p.kind = kind;
  p.e = e;
  p.accuracy = m.accuracy;
  p.area = m.area;
  p.power = m.power;
  p.gates = m.gates;
  return p;
}

} // namespace

std::vector<design_point> explore_prune( netlist const& n, std::span<prune_candidate const> cands, quantized_model const& q,
                                         eval_data const& data, cell_library const& lib, explore_options const& opts,
                                         stage kind, int e )
{
  struct config
  {
    double tau_c;
    int phi_c;
    std::vector<gate_id> pruned;
  };
  std::vector<config> configs;
  std::map<std::vector<gate_id>, std::size_t> seen;
  for ( auto tau_c : opts.tau_grid )
  {
    std::vector<int> phis;
    for ( auto const& c : cands )
    {
      if ( c.phi != phi_never && qualifies( c, tau_c, c.phi ) )
        phis.push_back( c.phi );
    }
    std::sort( phis.begin(), phis.end() );
    phis.erase( std::unique( phis.begin(), phis.end() ), phis.end() );
    for ( auto phi_c : phis )
    {
      auto ids = select_pruned( cands, tau_c, phi_c );
      if ( seen.emplace( ids, configs.size() ).second )
        configs.push_back( { tau_c, phi_c, std::move( ids ) } );
    }
  }

  std::vector<design_point> points( configs.size() );
  parallel_for( configs.size(), opts.threads, [&]( std::size_t i ) {
    auto const& cfg = configs[i];
    auto const pruned = prune( n, cands, cfg.tau_c, cfg.phi_c, lib );
    auto p = measured( kind, e, evaluate( pruned, q, data, lib, 1 ) );
    p.tau_c = cfg.tau_c;
    p.phi_c = cfg.phi_c;
    p.pruned = cfg.pruned;
    points[i] = std::move( p );
  } );
  return points;
}

exploration explore_cross( quantized_model const& q, int e, eval_data const& data, area_cache& cache,
                           explore_options const& opts )
{
  auto const& lib = cache.library();
  exploration x;
  x.exact_model = q;
  x.approx_model = approximate_model( q, e, cache );
  x.exact = gen_model_circuit( q, lib );
  x.approx = gen_model_circuit( x.approx_model, lib );

  x.exact_candidates = prune_candidates( x.exact, profile( x.exact, lib, data.profile, opts.threads ) );
  x.approx_candidates = prune_candidates( x.approx, profile( x.approx, lib, data.profile, opts.threads ) );

  auto const base = measured( stage::exact, 0, evaluate( x.exact, q, data, lib, opts.threads ) );
  x.points.push_back( base );
  x.points.push_back( measured( stage::coeff_only, e, evaluate( x.approx, x.approx_model, data, lib, opts.threads ) ) );
  auto prune_only = explore_prune( x.exact, x.exact_candidates, q, data, lib, opts, stage::prune_only, 0 );
  auto cross = explore_prune( x.approx, x.approx_candidates, x.approx_model, data, lib, opts, stage::cross, e );
  x.points.insert( x.points.end(), prune_only.begin(), prune_only.end() );
  x.points.insert( x.points.end(), cross.begin(), cross.end() );

  for ( auto& p : x.points )
  {
    p.normalized_area = base.area > 0.0 ? p.area / base.area : 1.0;
    p.normalized_power = base.power > 0.0 ? p.power / base.power : 1.0;
  }
  return x;
}

netlist materialize( design_point const& p, exploration const& x, cell_library const& lib )
{
  bool const approx = p.kind == stage::coeff_only || p.kind == stage::cross;
  auto const& parent = approx ? x.approx : x.exact;
  if ( !p.tau_c || !p.phi_c )
    return parent;
  return prune( parent, approx ? x.approx_candidates : x.exact_candidates, *p.tau_c, *p.phi_c, lib );
}

bool dominates( design_point const& a, design_point const& b )
{
  return a.accuracy >= b.accuracy && a.normalized_area <= b.normalized_area &&
         ( a.accuracy > b.accuracy || a.normalized_area < b.normalized_area );
}

std::vector<design_point> pareto( std::span<design_point const> points )
{
  std::vector<design_point const*> order;
  for ( auto const& p : points )
    order.push_back( &p );
  std::sort( order.begin(), order.end(), []( auto const* a, auto const* b ) {
    if ( a->accuracy != b->accuracy )
      return a->accuracy > b->accuracy;
    if ( a->normalized_area != b->normalized_area )
      return a->normalized_area < b->normalized_area;
    return config_less( *a, *b );
  } );
  std::vector<design_point> front;
  for ( auto const* p : order )
  {
    if ( front.empty() || p->normalized_area < front.back().normalized_area )
      front.push_back( *p );
  }
  return front;
}

std::optional<design_point> best_under_budget( std::span<design_point const> front, double reference, double budget )
{
  std::optional<design_point> best;
  for ( auto const& p : front )
  {
    if ( p.accuracy < reference - budget - 1e-12 )
      continue;
    if ( !best || p.normalized_area < best->normalized_area ||
         ( p.normalized_area == best->normalized_area && p.accuracy > best->accuracy ) )
      best = p;
  }
  return best;
}

namespace
{

template<typename T>
std::string opt_field( std::optional<T> const& v )
{
  return v ? fmt::format( "{}", *v ) : std::string{};
}

} // namespace

std::string report_csv( std::span<design_point const> points )
{
  std::string out = "stage,e,tau_c,phi_c,accuracy,area,normalized_area,power,normalized_power,gates,netlist_path\n";
  for ( auto const& p : points )
  {
    out += fmt::format( "{},{},{},{},{},{},{},{},{},{},{}\n", to_string( p.kind ), p.e, opt_field( p.tau_c ),
                        opt_field( p.phi_c ), p.accuracy, p.area, p.normalized_area, p.power, p.normalized_power,
                        p.gates, p.netlist_path );
  }
  return out;
}

nlohmann::json to_json( design_point const& p )
{
  nlohmann::json j = { { "stage", to_string( p.kind ) },
                       { "e", p.e },
                       { "tau_c", p.tau_c ? nlohmann::json( *p.tau_c ) : nlohmann::json() },
                       { "phi_c", p.phi_c ? nlohmann::json( *p.phi_c ) : nlohmann::json() },
                       { "accuracy", p.accuracy },
                       { "area", p.area },
                       { "normalized_area", p.normalized_area },
                       { "power", p.power },
                       { "normalized_power", p.normalized_power },
                       { "gates", p.gates },
                       { "netlist_path", p.netlist_path },
                       { "pruned_gates", p.pruned } };
  return j;
}

design_point design_point_from_json( nlohmann::json const& j )
{
  return json_guard( "design point", [&] {
    design_point p;
    p.kind = stage_from_string( require( j, "stage", "design point" ).get<std::string>() );
    p.e = require( j, "e", "design point" ).get<int>();
    if ( auto const& t = require( j, "tau_c", "design point" ); !t.is_null() )
      p.tau_c = t.get<double>();
    if ( auto const& f = require( j, "phi_c", "design point" ); !f.is_null() )
      p.phi_c = f.get<int>();
    p.accuracy = require( j, "accuracy", "design point" ).get<double>();
    p.area = require( j, "area", "design point" ).get<double>();
    p.normalized_area = require( j, "normalized_area", "design point" ).get<double>();
    p.power = require( j, "power", "design point" ).get<double>();
    p.normalized_power = require( j, "normalized_power", "design point" ).get<double>();
    p.gates = require( j, "gates", "design point" ).get<std::size_t>();
    p.netlist_path = require( j, "netlist_path", "design point" ).get<std::string>();
    p.pruned = require( j, "pruned_gates", "design point" ).get<std::vector<gate_id>>();
    return p;
  } );
}

nlohmann::json report_json( std::span<design_point const> points, std::span<design_point const> front )
{
  nlohmann::json j = { { "format", "bespoke-dse-report" }, { "version", 1 } };
  auto& ps = j["points"] = nlohmann::json::array();
  for ( auto const& p : points )
    ps.push_back( to_json( p ) );
  auto& fs = j["front"] = nlohmann::json::array();
  for ( auto const& p : front )
    fs.push_back( to_json( p ) );
  return j;
}

std::vector<design_point> points_from_report( nlohmann::json const& j )
{
  if ( j.value( "format", "" ) != "bespoke-dse-report" )
    throw data_error( "not a design-space report (format must be 'bespoke-dse-report')" );
  std::vector<design_point> out;
  for ( auto const& p : require( j, "points", "report" ) )
    out.push_back( design_point_from_json( p ) );
  return out;
}

std::string plot_data( std::span<design_point const> points )
{
  std::string out = "# normalized_area accuracy\n";
  for ( auto k : { stage::exact, stage::coeff_only, stage::prune_only, stage::cross } )
  {
    out += fmt::format( "\n# stage {}\n", to_string( k ) );
    for ( auto const& p : points )
    {
      if ( p.kind == k )
        out += fmt::format( "{} {}\n", p.normalized_area, p.accuracy );
    }
  }
  return out;
}

void write_report( std::span<design_point const> points, std::span<design_point const> front,
                   std::filesystem::path const& dir )
{
  write_text_file( dir / "report.csv", report_csv( points ) );
  write_text_file( dir / "front.csv", report_csv( front ) );
  write_text_file( dir / "report.json", report_json( points, front ).dump( 2 ) + "\n" );
  write_text_file( dir / "plot.dat", plot_data( points ) );
}

} // namespace bespoke
