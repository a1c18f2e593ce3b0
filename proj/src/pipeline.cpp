#include "bespoke/pipeline.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "bespoke/coeff_approx.hpp"
#include "bespoke/error.hpp"
#include "bespoke/json_util.hpp"
#include "bespoke/synth.hpp"

namespace bespoke
{

namespace
{

stimulus_source source_from_string( std::string const& s )
{
  if ( s == "train" )
    return stimulus_source::train;
  if ( s == "test" )
    return stimulus_source::test;
  throw data_error( fmt::format( "stimulus source must be 'train' or 'test', got '{}'", s ) );
}

std::string to_string( stimulus_source s )
{
  return s == stimulus_source::train ? "train" : "test";
}

std::filesystem::path resolve( std::filesystem::path const& base, std::string const& p )
{
  std::filesystem::path const path( p );
  return path.is_absolute() || base.empty() ? path : base / path;
}

} // namespace

void run_config::validate() const
{
  if ( dataset.empty() || !std::filesystem::exists( dataset ) )
    throw data_error( fmt::format( "dataset '{}' does not exist", dataset.string() ) );
  if ( model.empty() || !std::filesystem::exists( model ) )
    throw data_error( fmt::format( "model '{}' does not exist", model.string() ) );
  if ( !library.empty() && !std::filesystem::exists( library ) )
    throw data_error( fmt::format( "cell library '{}' does not exist", library.string() ) );
  spec.validate();
  if ( e < 0 )
    throw data_error( fmt::format( "e must be nonnegative, got {}", e ) );
  if ( tau_grid.empty() )
    throw data_error( "tau grid is empty" );
  for ( auto t : tau_grid )
  {
    if ( !( t >= 0.5 && t <= 1.0 ) )
      throw data_error( fmt::format( "tau grid value {} outside [0.5, 1]", t ) );
  }
  if ( !( split_ratio > 0.0 && split_ratio < 1.0 ) )
    throw data_error( fmt::format( "split ratio {} outside (0,1)", split_ratio ) );
  if ( accuracy_budget < 0.0 )
    throw data_error( "accuracy budget must be nonnegative" );
}

run_config config_from_json( nlohmann::json const& j, std::filesystem::path const& base_dir, run_config c )
{
  return json_guard( "config", [&] {
    if ( !j.is_object() )
      throw data_error( "config: expected an object" );
    if ( j.contains( "dataset" ) )
    {
      auto const& d = j["dataset"];
      c.dataset = resolve( base_dir, require( d, "path", "config.dataset" ).get<std::string>() );
      c.schema.label_column = d.value( "label_column", c.schema.label_column );
      c.schema.label_index = d.value( "label_index", c.schema.label_index );
      auto const delim = d.value( "delimiter", std::string( 1, c.schema.delimiter ) );
      if ( delim.size() != 1 )
        throw data_error( "config.dataset: delimiter must be one character" );
      c.schema.delimiter = delim[0];
      if ( d.contains( "header" ) )
        c.schema.header = d["header"].get<bool>();
      c.schema.label_offset = d.value( "label_offset", c.schema.label_offset );
    }
    if ( j.contains( "model" ) )
      c.model = resolve( base_dir, j["model"].get<std::string>() );
    if ( j.contains( "spec" ) )
    {
      auto const& s = j["spec"];
      c.spec.input_bits = s.value( "input_bits", c.spec.input_bits );
      c.spec.coeff_bits = s.value( "coeff_bits", c.spec.coeff_bits );
      c.spec.hidden_bits = s.value( "hidden_bits", c.spec.hidden_bits );
    }
    if ( j.contains( "library" ) && !j["library"].is_null() )
      c.library = resolve( base_dir, j["library"].get<std::string>() );
    c.e = j.value( "e", c.e );
    if ( j.contains( "tau_grid" ) )
      c.tau_grid = j["tau_grid"].get<std::vector<double>>();
    c.seed = j.value( "seed", c.seed );
    c.split_ratio = j.value( "split_ratio", c.split_ratio );
    if ( j.contains( "output" ) )
      c.output = resolve( base_dir, j["output"].get<std::string>() );
    if ( j.contains( "cache_dir" ) )
      c.cache_dir = resolve( base_dir, j["cache_dir"].get<std::string>() );
    if ( j.contains( "profile_stimulus" ) )
      c.profile_stimulus = source_from_string( j["profile_stimulus"].get<std::string>() );
    if ( j.contains( "power_stimulus" ) )
      c.power_stimulus = source_from_string( j["power_stimulus"].get<std::string>() );
    c.threads = j.value( "threads", c.threads );
    c.accuracy_budget = j.value( "accuracy_budget", c.accuracy_budget );
    return c;
  } );
}

run_config load_config( std::filesystem::path const& path )
{
  return config_from_json( read_json_file( path ), path.parent_path() );
}

nlohmann::json to_json( run_config const& c )
{
  nlohmann::json d = { { "path", c.dataset.string() },
                       { "label_column", c.schema.label_column },
                       { "label_index", c.schema.label_index },
                       { "delimiter", std::string( 1, c.schema.delimiter ) },
                       { "label_offset", c.schema.label_offset } };
  if ( c.schema.header )
    d["header"] = *c.schema.header;
  return { { "dataset", d },
           { "model", c.model.string() },
           { "spec", { { "input_bits", c.spec.input_bits }, { "coeff_bits", c.spec.coeff_bits }, { "hidden_bits", c.spec.hidden_bits } } },
           { "library", c.library.empty() ? nlohmann::json() : nlohmann::json( c.library.string() ) },
           { "e", c.e },
           { "tau_grid", c.tau_grid },
           { "seed", c.seed },
           { "split_ratio", c.split_ratio },
           { "output", c.output.string() },
           { "cache_dir", c.cache_dir.string() },
           { "profile_stimulus", to_string( c.profile_stimulus ) },
           { "power_stimulus", to_string( c.power_stimulus ) },
           { "threads", c.threads },
           { "accuracy_budget", c.accuracy_budget } };
}

cell_library load_library( run_config const& c )
{
  return c.library.empty() ? cell_library::default_library() : load_cell_library( c.library );
}

quantized_model load_model( run_config const& c )
{
  auto const j = read_json_file( c.model );
  if ( j.is_object() && j.value( "format", "" ) == "bespoke-quantized-model" )
    return quantized_model_from_json( j );
  return quantize_model( real_model_from_json( j ), c.spec );
}

prepared_run prepare( run_config const& c )
{
  c.validate();
  prepared_run p;
  p.lib = load_library( c );
  p.model = load_model( c );
  auto const d = load_dataset( c.dataset, c.schema );
  if ( d.num_features() != static_cast<std::size_t>( p.model.n_features ) )
    throw data_error( fmt::format( "dataset has {} features but the model expects {}", d.num_features(), p.model.n_features ) );
  p.split = split_normalize( d, c.split_ratio, c.seed );
  p.train_x = quantize_inputs( p.split.train, p.model.spec.input_bits );
  p.test_x = quantize_inputs( p.split.test, p.model.spec.input_bits );
  return p;
}

eval_data make_eval_data( prepared_run const& p, run_config const& c )
{
  eval_data data;
  data.profile = feature_stimulus( c.profile_stimulus == stimulus_source::train ? p.train_x : p.test_x );
  data.test = feature_stimulus( p.test_x );
  data.test_labels = p.split.test.labels;
  if ( c.power_stimulus == stimulus_source::train )
    data.power = feature_stimulus( p.train_x );
  return data;
}

equiv_report verify_circuit( netlist const& n, prepared_run const& p, int_matrix const& inputs, int threads )
{
  auto const s = feature_stimulus( inputs );
  auto const out = simulate( n, p.lib, s, threads );
  equiv_report r;
  r.vectors_checked = inputs.size();
  for ( std::size_t i = 0; i < inputs.size(); ++i )
  {
    auto const expect = golden_infer( p.model, inputs[i] ).decision;
    if ( out[i].at( 0 ) != expect )
    {
      ++r.mismatch_count;
      if ( r.mismatches.size() < 16 )
        r.mismatches.push_back( { inputs[i], out[i], { expect } } );
    }
  }
  return r;
}

void write_manifest( run_config const& c, cell_library const& lib, std::string const& command )
{
  nlohmann::json const m = { { "format", "bespoke-run-manifest" },
                             { "version", 1 },
                             { "command", command },
                             { "config", to_json( c ) },
                             { "seed", c.seed },
                             { "library", lib.name() },
                             { "library_hash", lib.hash() } };
  write_text_file( c.output / "manifest.json", m.dump( 2 ) + "\n" );
}

explore_outcome run_explore( run_config const& c, prepared_run const& p )
{
  auto const data = make_eval_data( p, c );
  area_cache cache( p.lib, p.model.spec.coeff_bits, c.cache_dir.empty() ? c.output / "cache" : c.cache_dir );
  explore_options opts;
  opts.tau_grid = c.tau_grid;
  opts.threads = c.threads;

  explore_outcome out;
  out.x = explore_cross( p.model, c.e, data, cache, opts );
  cache.save();

  auto& points = out.x.points;
  auto const front_keys = pareto( points );
  for ( auto& pt : points )
  {
    bool const on_front = std::any_of( front_keys.begin(), front_keys.end(), [&]( auto const& f ) { return f.label() == pt.label(); } );
    if ( !on_front && pt.kind != stage::exact && pt.kind != stage::coeff_only )
      continue;
    auto const rel = std::filesystem::path( "netlists" ) / ( pt.label() + ".json" );
    save_netlist( materialize( pt, out.x, p.lib ), c.output / rel );
    pt.netlist_path = rel.generic_string();
  }
  out.front = pareto( points );
  out.best = best_under_budget( out.front, points.front().accuracy, c.accuracy_budget );
  write_report( points, out.front, c.output );
  write_text_file( c.output / "model_exact.json", serialize( out.x.exact_model ) );
  write_text_file( c.output / "model_approx.json", serialize( out.x.approx_model ) );
  return out;
}

std::string area_table( cell_library const& lib, unsigned input_bits, unsigned coeff_bits,
                        std::filesystem::path const& cache_dir )
{
  area_cache cache( lib, coeff_bits, cache_dir );
  auto const lo = -( std::int64_t{ 1 } << ( coeff_bits - 1 ) );
  auto const hi = ( std::int64_t{ 1 } << ( coeff_bits - 1 ) ) - 1;
  std::vector<double> areas( static_cast<std::size_t>( hi - lo + 1 ) );
#pragma omp parallel for schedule( dynamic )
  for ( std::int64_t w = lo; w <= hi; ++w )
    areas[static_cast<std::size_t>( w - lo )] = cache.get( w, input_bits );
  cache.save();
  std::string out = fmt::format( "# w area_bm (u={}, c={}, library {})\n", input_bits, coeff_bits, lib.name() );
  for ( std::int64_t w = lo; w <= hi; ++w )
    out += fmt::format( "{} {}\n", w, areas[static_cast<std::size_t>( w - lo )] );
  return out;
}

} // namespace bespoke
