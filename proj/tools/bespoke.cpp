#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "bespoke/coeff_approx.hpp"
#include "bespoke/dse.hpp"
#include "bespoke/error.hpp"
#include "bespoke/hdl.hpp"
#include "bespoke/json_util.hpp"
#include "bespoke/pipeline.hpp"
#include "bespoke/prune.hpp"
#include "bespoke/synth.hpp"

using namespace bespoke;

namespace
{

enum exit_code
{
  ok = 0,
  usage = 1,
  data_failure = 2,
  verification_failure = 3
};

/* Flags shared by every data-driven command; unset flags leave the config untouched. */
struct common_flags
{
  std::string config;
  std::optional<std::string> dataset, label_column, delimiter, model, library, output, profile_stimulus, power_stimulus;
  std::optional<double> label_offset, split_ratio, accuracy_budget;
  std::optional<int> e, threads;
  std::optional<unsigned> input_bits, coeff_bits, hidden_bits;
  std::optional<std::uint64_t> seed;
  std::vector<double> tau_grid;

  void attach( CLI::App* app )
  {
    app->add_option( "-c,--config", config, "JSON run configuration" )->check( CLI::ExistingFile );
    app->add_option( "--dataset", dataset, "delimiter-separated dataset file" );
    app->add_option( "--label-column", label_column, "name of the label column" );
    app->add_option( "--delimiter", delimiter, "field delimiter" );
    app->add_option( "--label-offset", label_offset, "value subtracted from every label" );
    app->add_option( "--model", model, "real or quantized model file" );
    app->add_option( "--library", library, "cell library file (default: built-in)" );
    app->add_option( "-o,--output", output, "output directory" );
    app->add_option( "--input-bits", input_bits, "input precision u" );
    app->add_option( "--coeff-bits", coeff_bits, "coefficient precision c" );
    app->add_option( "--hidden-bits", hidden_bits, "hidden activation precision h" );
    app->add_option( "-e,--e", e, "coefficient approximation threshold" );
    app->add_option( "--seed", seed, "split seed" );
    app->add_option( "--split-ratio", split_ratio, "training fraction" );
    app->add_option( "--tau-grid", tau_grid, "tau_c values, e.g. 0.9,0.95" )->delimiter( ',' );
    app->add_option( "--profile-stimulus", profile_stimulus, "train|test vectors for pruning decisions" );
    app->add_option( "--power-stimulus", power_stimulus, "train|test vectors for power" );
    app->add_option( "--accuracy-budget", accuracy_budget, "allowed absolute accuracy loss" );
    app->add_option( "-j,--threads", threads, "worker threads (0: all cores)" );
  }

  run_config resolve() const
  {
    run_config c;
    if ( !config.empty() )
      c = load_config( config );
    nlohmann::json j = nlohmann::json::object();
    if ( dataset || label_column || delimiter || label_offset )
    {
      auto d = nlohmann::json{ { "path", dataset.value_or( c.dataset.string() ) } };
      if ( label_column )
        d["label_column"] = *label_column;
      if ( delimiter )
        d["delimiter"] = *delimiter;
      if ( label_offset )
        d["label_offset"] = *label_offset;
      j["dataset"] = d;
    }
    auto set = [&]( char const* key, auto const& v ) {
      if ( v )
        j[key] = *v;
    };
    set( "model", model );
    set( "library", library );
    set( "output", output );
    set( "e", e );
    set( "seed", seed );
    set( "split_ratio", split_ratio );
    set( "profile_stimulus", profile_stimulus );
    set( "power_stimulus", power_stimulus );
    set( "accuracy_budget", accuracy_budget );
    set( "threads", threads );
    if ( input_bits || coeff_bits || hidden_bits )
    {
      j["spec"] = nlohmann::json::object();
      if ( input_bits )
        j["spec"]["input_bits"] = *input_bits;
      if ( coeff_bits )
        j["spec"]["coeff_bits"] = *coeff_bits;
      if ( hidden_bits )
        j["spec"]["hidden_bits"] = *hidden_bits;
    }
    if ( !tau_grid.empty() )
      j["tau_grid"] = tau_grid;
    return config_from_json( j, {}, c );
  }
};

netlist load_any_netlist( std::string const& path )
{
  auto const ext = std::filesystem::path( path ).extension();
  return ext == ".v" ? load_hdl( path ) : load_netlist( path );
}

void print_point( design_point const& p )
{
  fmt::print( "  {:<24} accuracy {:.4f}  area {:>9.1f} ({:.3f})  power {:>9.3f} ({:.3f})  gates {}\n", p.label(),
              p.accuracy, p.area, p.normalized_area, p.power, p.normalized_power, p.gates );
}

int cmd_synth( common_flags const& f )
{
  auto const c = f.resolve();
  auto const p = prepare( c );
  for ( auto const& w : p.split.warnings )
    fmt::print( stderr, "warning: {}\n", w );
  auto const n = gen_model_circuit( p.model, p.lib );
  auto const train = verify_circuit( n, p, p.train_x, c.threads );
  auto const test = verify_circuit( n, p, p.test_x, c.threads );
  auto const a = area( n, p.lib );

  save_netlist( n, c.output / "netlist.json" );
  save_hdl( n, c.output / "netlist.v" );
  write_text_file( c.output / "model_quantized.json", serialize( p.model ) );
  nlohmann::json report = { { "area", a.total_area }, { "gates", a.gate_count }, { "cells", a.cell_counts },
                            { "mismatches", train.mismatch_count + test.mismatch_count },
                            { "vectors", train.vectors_checked + test.vectors_checked } };
  write_text_file( c.output / "area.json", report.dump( 2 ) + "\n" );
  write_manifest( c, p.lib, "synth" );

  fmt::print( "{}: {} gates, area {}, golden mismatches {} of {} samples\n", n.name, a.gate_count, a.total_area,
              train.mismatch_count + test.mismatch_count, train.vectors_checked + test.vectors_checked );
  if ( !train.equivalent() || !test.equivalent() )
    throw verification_error( "generated netlist disagrees with the golden model" );
  return ok;
}

int cmd_eval( common_flags const& f, std::string const& netlist_path )
{
  auto const c = f.resolve();
  auto const p = prepare( c );
  auto const n = netlist_path.empty() ? gen_model_circuit( p.model, p.lib ) : load_any_netlist( netlist_path );
  if ( auto const d = validate( n, &p.lib ); !d.ok() )
    throw data_error( fmt::format( "netlist: {}", d.messages.front() ) );
  auto const m = evaluate( n, p.model, make_eval_data( p, c ), p.lib, c.threads );
  std::vector<std::int64_t> golden;
  for ( auto const& x : p.test_x )
    golden.push_back( golden_infer( p.model, x ).decision );
  nlohmann::json const out = { { "accuracy", m.accuracy }, { "golden_accuracy", accuracy( p.model, golden, p.split.test.labels ) },
                               { "area", m.area }, { "power", m.power }, { "gates", m.gates } };
  fmt::print( "{}\n", out.dump( 2 ) );
  return ok;
}

int cmd_coeff_approx( common_flags const& f )
{
  auto const c = f.resolve();
  auto const p = prepare( c );
  area_cache cache( p.lib, p.model.spec.coeff_bits, c.cache_dir.empty() ? c.output / "cache" : c.cache_dir );
  auto const approx = approximate_model( p.model, c.e, cache );
  cache.save();
  auto const before = area( gen_model_circuit( p.model, p.lib ), p.lib ).total_area;
  auto const after = area( gen_model_circuit( approx, p.lib ), p.lib ).total_area;
  write_text_file( c.output / "model_approx.json", serialize( approx ) );
  write_manifest( c, p.lib, "coeff-approx" );

  auto const& prov = *approx.provenance;
  fmt::print( "e = {}\n  sum  error  proxy_before  proxy_after\n", prov.e );
  for ( std::size_t i = 0; i < prov.error_sums.size(); ++i )
    fmt::print( "  {:>3}  {:>5}  {:>12}  {:>11}\n", i, prov.error_sums[i], prov.proxy_area_before[i], prov.proxy_area_after[i] );
  fmt::print( "circuit area {} -> {} ({:.3f})\n", before, after, before > 0 ? after / before : 1.0 );
  return ok;
}

int cmd_prune( common_flags const& f, std::string const& netlist_path, double tau_c, int phi_c )
{
  auto const c = f.resolve();
  auto const p = prepare( c );
  auto const n = netlist_path.empty() ? gen_model_circuit( p.model, p.lib ) : load_any_netlist( netlist_path );
  auto const data = make_eval_data( p, c );
  auto const cands = prune_candidates( n, profile( n, p.lib, data.profile, c.threads ) );
  auto const pruned = prune( n, cands, tau_c, phi_c, p.lib );
  auto const base = evaluate( n, p.model, data, p.lib, c.threads );
  auto const m = evaluate( pruned, p.model, data, p.lib, c.threads );

  write_text_file( c.output / "candidates.json", to_json( std::span{ cands } ).dump( 1 ) + "\n" );
  save_netlist( pruned, c.output / "pruned.json" );
  write_manifest( c, p.lib, "prune" );
  fmt::print( "pruned {} gates at tau_c {} phi_c {}\n", pruned.meta["prune"]["removed"].size(), tau_c, phi_c );
  fmt::print( "accuracy {:.4f} -> {:.4f}, area {} -> {}, power {:.3f} -> {:.3f}\n", base.accuracy, m.accuracy, base.area,
              m.area, base.power, m.power );
  return ok;
}

int cmd_explore( common_flags const& f )
{
  auto const c = f.resolve();
  auto const p = prepare( c );
  auto const out = run_explore( c, p );
  write_manifest( c, p.lib, "explore" );

  auto const& pts = out.x.points;
  fmt::print( "{} design points ({} exact, coefficient approximation e = {})\n", pts.size(), to_string( p.model.kind ), c.e );
  fmt::print( "Pareto front:\n" );
  for ( auto const& pt : out.front )
    print_point( pt );
  if ( out.best )
  {
    fmt::print( "best within {:.2f}% accuracy loss:\n", c.accuracy_budget * 100.0 );
    print_point( *out.best );
  }
  fmt::print( "reports written to {}\n", c.output.string() );
  return ok;
}

int cmd_pareto( std::string const& report, std::string const& output )
{
  auto const points = points_from_report( read_json_file( report ) );
  auto const front = pareto( points );
  if ( output.empty() )
    fmt::print( "{}", report_csv( front ) );
  else
    write_text_file( output, report_csv( front ) );
  return ok;
}

int cmd_area_table( std::string const& library, unsigned u, unsigned c, std::string const& cache_dir )
{
  auto const lib = library.empty() ? cell_library::default_library() : load_cell_library( library );
  fmt::print( "{}", area_table( lib, u, c, cache_dir ) );
  return ok;
}

} // namespace

int main( int argc, char** argv )
{
  CLI::App app{ "bespoke: hardwired ML circuit generation, approximation and design-space exploration" };
  app.require_subcommand( 1 );

  common_flags synth_f, eval_f, approx_f, prune_f, explore_f;
  auto* synth = app.add_subcommand( "synth", "generate, verify and write the exact bespoke circuit" );
  synth_f.attach( synth );

  std::string eval_netlist;
  auto* eval = app.add_subcommand( "eval", "score a netlist (default: the exact circuit) on the test split" );
  eval_f.attach( eval );
  eval->add_option( "--netlist", eval_netlist, "netlist file (.json or .v)" );

  auto* approx = app.add_subcommand( "coeff-approx", "approximate the model coefficients" );
  approx_f.attach( approx );

  std::string prune_netlist;
  double tau_c = 0.95;
  int phi_c = 0;
  auto* prune_cmd = app.add_subcommand( "prune", "prune one (tau_c, phi_c) configuration" );
  prune_f.attach( prune_cmd );
  prune_cmd->add_option( "--netlist", prune_netlist, "netlist file (.json or .v)" );
  prune_cmd->add_option( "--tau", tau_c, "tau_c threshold" )->required()->check( CLI::Range( 0.5, 1.0 ) );
  prune_cmd->add_option( "--phi", phi_c, "phi_c threshold" )->required()->check( CLI::Range( -1, 1 << 20 ) );

  auto* explore = app.add_subcommand( "explore", "full cross-layer design-space exploration" );
  explore_f.attach( explore );

  std::string report, pareto_out;
  auto* pareto_cmd = app.add_subcommand( "pareto", "extract the Pareto front of a report" );
  pareto_cmd->add_option( "report", report, "report.json" )->required()->check( CLI::ExistingFile );
  pareto_cmd->add_option( "-o,--output", pareto_out, "CSV output file (default: stdout)" );

  std::string table_lib, table_cache;
  unsigned table_u = 4, table_c = 8;
  auto* table = app.add_subcommand( "area-table", "area of every bespoke multiplier" );
  table->add_option( "--library", table_lib, "cell library file" );
  table->add_option( "--input-bits", table_u, "input precision u" )->check( CLI::Range( 1, 16 ) );
  table->add_option( "--coeff-bits", table_c, "coefficient precision c" )->check( CLI::Range( 2, 12 ) );
  table->add_option( "--cache-dir", table_cache, "directory of the area cache" );

  try
  {
    app.parse( argc, argv );
  }
  catch ( CLI::ParseError const& e )
  {
    auto const code = app.exit( e );
    return code == 0 ? ok : usage;
  }

  try
  {
    if ( *synth )
      return cmd_synth( synth_f );
    if ( *eval )
      return cmd_eval( eval_f, eval_netlist );
    if ( *approx )
      return cmd_coeff_approx( approx_f );
    if ( *prune_cmd )
      return cmd_prune( prune_f, prune_netlist, tau_c, phi_c );
    if ( *explore )
      return cmd_explore( explore_f );
    if ( *pareto_cmd )
      return cmd_pareto( report, pareto_out );
    if ( *table )
      return cmd_area_table( table_lib, table_u, table_c, table_cache );
  }
  catch ( verification_error const& e )
  {
    fmt::print( stderr, "verification error: {}\n", e.what() );
    return verification_failure;
  }
  catch ( std::exception const& e )
  {
    fmt::print( stderr, "error: {}\n", e.what() );
    return data_failure;
  }
  return usage;
}
