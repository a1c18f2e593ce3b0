#include "bespoke/model.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include <fmt/format.h>

#include "bespoke/error.hpp"
#include "bespoke/json_util.hpp"

namespace bespoke
{

namespace
{

/* splitmix64: the split is replayed by the fixture scripts, so the generator
   must be fully specified rather than implementation-defined. */
struct splitmix64
{
  std::uint64_t state;

  std::uint64_t operator()()
  {
    std::uint64_t z = ( state += 0x9e3779b97f4a7c15ull );
    z = ( z ^ ( z >> 30 ) ) * 0xbf58476d1ce4e5b9ull;
    z = ( z ^ ( z >> 27 ) ) * 0x94d049bb133111ebull;
    return z ^ ( z >> 31 );
  }
};

std::string trim( std::string_view s )
{
  auto const first = s.find_first_not_of( " \t\r\n" );
  if ( first == std::string_view::npos )
    return {};
  auto const last = s.find_last_not_of( " \t\r\n" );
  std::string out{ s.substr( first, last - first + 1 ) };
  if ( out.size() >= 2 && ( out.front() == '"' || out.front() == '\'' ) && out.back() == out.front() )
    out = out.substr( 1, out.size() - 2 );
  return out;
}

std::vector<std::string> split_line( std::string const& line, char delim )
{
  std::vector<std::string> tokens;
  std::size_t start = 0;
  while ( true )
  {
    auto const pos = line.find( delim, start );
    tokens.push_back( trim( std::string_view{ line }.substr( start, pos == std::string::npos ? std::string::npos : pos - start ) ) );
    if ( pos == std::string::npos )
      break;
    start = pos + 1;
  }
  return tokens;
}

std::optional<double> parse_number( std::string const& tok )
{
  if ( tok.empty() )
    return std::nullopt;
  double v{};
  auto const* first = tok.data();
  auto const* last = tok.data() + tok.size();
  if ( *first == '+' )
    ++first;
  auto const [ptr, ec] = std::from_chars( first, last, v );
  if ( ec != std::errc{} || ptr != last || !std::isfinite( v ) )
    return std::nullopt;
  return v;
}

std::int64_t clamp_signed( std::int64_t v, unsigned bits )
{
  std::int64_t const hi = ( std::int64_t{ 1 } << ( bits - 1 ) ) - 1;
  std::int64_t const lo = -( std::int64_t{ 1 } << ( bits - 1 ) );
  return std::clamp( v, lo, hi );
}

} // namespace

dataset load_dataset( std::filesystem::path const& path, dataset_schema const& schema )
{
  std::ifstream in( path );
  if ( !in )
    throw data_error( fmt::format( "cannot open dataset file '{}'", path.string() ) );

  std::vector<std::pair<std::size_t, std::vector<std::string>>> rows;
  std::string line;
  std::size_t line_no = 0;
  while ( std::getline( in, line ) )
  {
    ++line_no;
    if ( trim( line ).empty() )
      continue;
    rows.emplace_back( line_no, split_line( line, schema.delimiter ) );
  }
  if ( rows.empty() )
    throw data_error( fmt::format( "dataset file '{}' is empty", path.string() ) );

  bool header = false;
  if ( schema.header )
    header = *schema.header;
  else
    header = std::any_of( rows.front().second.begin(), rows.front().second.end(),
                          []( auto const& t ) { return !parse_number( t ).has_value(); } );

  auto const width = rows.front().second.size();
  if ( width < 2 )
    throw data_error( fmt::format( "dataset '{}' needs at least one feature and a label column", path.string() ) );

  std::size_t label_col = 0;
  if ( !schema.label_column.empty() )
  {
    if ( !header )
      throw data_error( "label column selected by name but the dataset has no header" );
    auto const& names = rows.front().second;
    auto const it = std::find( names.begin(), names.end(), schema.label_column );
    if ( it == names.end() )
      throw data_error( fmt::format( "label column '{}' not found in header", schema.label_column ) );
    label_col = static_cast<std::size_t>( it - names.begin() );
  }
  else
  {
    auto const idx = schema.label_index < 0 ? static_cast<long>( width ) + schema.label_index : schema.label_index;
    if ( idx < 0 || idx >= static_cast<long>( width ) )
      throw data_error( fmt::format( "label index {} out of range for {} columns", schema.label_index, width ) );
    label_col = static_cast<std::size_t>( idx );
  }

  dataset d;
  for ( std::size_t c = 0; c < width; ++c )
  {
    if ( c == label_col )
      continue;
    d.feature_names.push_back( header ? rows.front().second[c] : fmt::format( "f{}", d.feature_names.size() ) );
  }

  std::size_t row_index = 0;
  for ( std::size_t r = header ? 1 : 0; r < rows.size(); ++r, ++row_index )
  {
    auto const& [lno, tokens] = rows[r];
    if ( tokens.size() != width )
      throw data_error( fmt::format( "row {} (line {}): expected {} fields, found {}", row_index, lno, width, tokens.size() ) );
    std::vector<double> features;
    features.reserve( width - 1 );
    double label = 0.0;
    for ( std::size_t c = 0; c < width; ++c )
    {
      auto const v = parse_number( tokens[c] );
      if ( !v )
        throw data_error( fmt::format( "row {} (line {}): non-numeric field '{}' in column {}", row_index, lno, tokens[c], c ) );
      if ( c == label_col )
        label = *v - schema.label_offset;
      else
        features.push_back( *v );
    }
    d.features.push_back( std::move( features ) );
    d.labels.push_back( label );
  }
  return d;
}

split_result split_normalize( dataset const& d, double ratio, std::uint64_t seed )
{
  if ( d.size() == 0 )
    throw data_error( "cannot split an empty dataset" );
  if ( !( ratio > 0.0 && ratio < 1.0 ) )
    throw data_error( fmt::format( "split ratio {} outside (0,1)", ratio ) );

  auto const n = d.size();
  std::vector<std::size_t> perm( n );
  std::iota( perm.begin(), perm.end(), 0 );
  splitmix64 rng{ seed };
  for ( std::size_t i = n - 1; i > 0; --i )
  {
    auto const j = static_cast<std::size_t>( rng() % ( i + 1 ) );
    std::swap( perm[i], perm[j] );
  }

  auto const n_train = static_cast<std::size_t>( std::llround( ratio * static_cast<double>( n ) ) );
  if ( n_train == 0 || n_train >= n )
    throw data_error( fmt::format( "split of {} samples at ratio {} leaves an empty side", n, ratio ) );

  split_result out;
  out.train.feature_names = d.feature_names;
  out.test.feature_names = d.feature_names;
  for ( std::size_t i = 0; i < n; ++i )
  {
    auto& side = i < n_train ? out.train : out.test;
    side.features.push_back( d.features[perm[i]] );
    side.labels.push_back( d.labels[perm[i]] );
  }

  auto const nf = d.num_features();
  out.norm.min.assign( nf, std::numeric_limits<double>::infinity() );
  out.norm.max.assign( nf, -std::numeric_limits<double>::infinity() );
  for ( auto const& row : out.train.features )
  {
    for ( std::size_t f = 0; f < nf; ++f )
    {
      out.norm.min[f] = std::min( out.norm.min[f], row[f] );
      out.norm.max[f] = std::max( out.norm.max[f], row[f] );
    }
  }
  for ( std::size_t f = 0; f < nf; ++f )
  {
    if ( out.norm.min[f] == out.norm.max[f] )
      out.warnings.push_back( fmt::format( "feature '{}' is constant on the training split; normalized to 0", d.feature_names[f] ) );
  }

  auto normalize = [&]( dataset& side ) {
    for ( auto& row : side.features )
    {
      for ( std::size_t f = 0; f < nf; ++f )
      {
        double const range = out.norm.max[f] - out.norm.min[f];
        double const v = range > 0.0 ? ( row[f] - out.norm.min[f] ) / range : 0.0;
        row[f] = std::clamp( v, 0.0, 1.0 );
      }
    }
  };
  normalize( out.train );
  normalize( out.test );
  return out;
}

std::int64_t round_nearest( double v )
{
  return static_cast<std::int64_t>( std::llround( v ) );
}

int_matrix quantize_inputs( dataset const& d, unsigned input_bits )
{
  auto const top = ( std::int64_t{ 1 } << input_bits ) - 1;
  int_matrix out;
  out.reserve( d.size() );
  for ( auto const& row : d.features )
  {
    std::vector<std::int64_t> q( row.size() );
    std::transform( row.begin(), row.end(), q.begin(), [&]( double v ) {
      return std::clamp<std::int64_t>( round_nearest( v * static_cast<double>( top ) ), 0, top );
    } );
    out.push_back( std::move( q ) );
  }
  return out;
}

/* Models */

bool is_classifier( model_kind k )
{
  return k == model_kind::mlp_c || k == model_kind::svm_c;
}

bool is_mlp( model_kind k )
{
  return k == model_kind::mlp_c || k == model_kind::mlp_r;
}

std::string to_string( model_kind k )
{
  switch ( k )
  {
  case model_kind::mlp_c:
    return "mlp_c";
  case model_kind::mlp_r:
    return "mlp_r";
  case model_kind::svm_c:
    return "svm_c";
  case model_kind::svm_r:
    return "svm_r";
  }
  return "?";
}

model_kind model_kind_from_string( std::string const& s )
{
  if ( s == "mlp_c" || s == "MLP-C" )
    return model_kind::mlp_c;
  if ( s == "mlp_r" || s == "MLP-R" )
    return model_kind::mlp_r;
  if ( s == "svm_c" || s == "SVM-C" )
    return model_kind::svm_c;
  if ( s == "svm_r" || s == "SVM-R" )
    return model_kind::svm_r;
  throw data_error( fmt::format( "unknown model kind '{}'", s ) );
}

void fixed_point_spec::validate() const
{
  if ( input_bits < 1 || input_bits > 16 )
    throw data_error( fmt::format( "input_bits {} outside [1,16]", input_bits ) );
  if ( coeff_bits < 2 || coeff_bits > 16 )
    throw data_error( fmt::format( "coeff_bits {} outside [2,16]", coeff_bits ) );
  if ( hidden_bits < 1 || hidden_bits > 16 )
    throw data_error( fmt::format( "hidden_bits {} outside [1,16]", hidden_bits ) );
}

void real_model::validate() const
{
  if ( n_features < 1 )
    throw data_error( "model: n_features must be positive" );
  if ( is_classifier( kind ) && n_classes < 2 )
    throw data_error( "model: classifiers need n_classes >= 2" );

  if ( is_mlp( kind ) )
  {
    if ( layers.size() != 2 )
      throw data_error( fmt::format( "model: MLPs need exactly one hidden and one output layer, found {} layers", layers.size() ) );
    std::size_t fan_in = static_cast<std::size_t>( n_features );
    for ( std::size_t l = 0; l < layers.size(); ++l )
    {
      auto const& layer = layers[l];
      if ( layer.weights.empty() )
        throw data_error( fmt::format( "model: layer {} has no neurons", l ) );
      if ( layer.intercepts.size() != layer.weights.size() )
        throw data_error( fmt::format( "model: layer {} has {} neurons but {} intercepts", l, layer.weights.size(), layer.intercepts.size() ) );
      for ( auto const& row : layer.weights )
      {
        if ( row.size() != fan_in )
          throw data_error( fmt::format( "model: layer {} expects {} inputs per neuron, found {}", l, fan_in, row.size() ) );
      }
      fan_in = layer.weights.size();
    }
    if ( layers[0].act != activation::relu )
      throw data_error( "model: hidden layer activation must be relu" );
    if ( layers[1].act != activation::none )
      throw data_error( "model: output layer activation must be none" );
    auto const outputs = layers[1].weights.size();
    if ( kind == model_kind::mlp_r && outputs != 1 )
      throw data_error( "model: MLP regressors have a single output neuron" );
    if ( kind == model_kind::mlp_c && outputs != static_cast<std::size_t>( n_classes ) )
      throw data_error( fmt::format( "model: MLP classifier has {} outputs for {} classes", outputs, n_classes ) );
  }
  else
  {
    auto const expected = kind == model_kind::svm_c ? static_cast<std::size_t>( n_classes * ( n_classes - 1 ) / 2 ) : 1u;
    if ( classifiers.size() != expected )
      throw data_error( fmt::format( "model: expected {} classifiers, found {}", expected, classifiers.size() ) );
    for ( std::size_t i = 0; i < classifiers.size(); ++i )
    {
      auto const& c = classifiers[i];
      if ( c.weights.size() != static_cast<std::size_t>( n_features ) )
        throw data_error( fmt::format( "model: classifier {} has {} weights for {} features", i, c.weights.size(), n_features ) );
      if ( kind == model_kind::svm_c )
      {
        if ( !c.classes || c.classes->first == c.classes->second || c.classes->first < 0 || c.classes->second < 0 ||
             c.classes->first >= n_classes || c.classes->second >= n_classes )
          throw data_error( fmt::format( "model: classifier {} has an invalid class pair", i ) );
      }
    }
  }
}

void quantized_model::validate() const
{
  spec.validate();
  auto const lo = -( std::int64_t{ 1 } << ( spec.coeff_bits - 1 ) );
  auto const hi = ( std::int64_t{ 1 } << ( spec.coeff_bits - 1 ) ) - 1;
  if ( layers.empty() )
    throw data_error( "quantized model has no layers" );
  std::size_t fan_in = static_cast<std::size_t>( n_features );
  for ( std::size_t l = 0; l < layers.size(); ++l )
  {
    for ( auto const& s : layers[l].sums )
    {
      if ( s.weights.size() != fan_in )
        throw data_error( fmt::format( "quantized model: layer {} weight count {} != fan-in {}", l, s.weights.size(), fan_in ) );
      for ( auto w : s.weights )
      {
        if ( w < lo || w > hi )
          throw data_error( fmt::format( "quantized model: weight {} outside signed {}-bit range", w, spec.coeff_bits ) );
      }
    }
    fan_in = layers[l].sums.size();
  }
  if ( is_mlp( kind ) && layers.size() != 2 )
    throw data_error( "quantized model: MLPs have two layers" );
  if ( !is_mlp( kind ) && layers.size() != 1 )
    throw data_error( "quantized model: SVMs have one layer" );
}

std::size_t quantized_model::num_sums() const
{
  std::size_t n = 0;
  for ( auto const& l : layers )
    n += l.sums.size();
  return n;
}

double symmetric_scale( std::span<double const> weights, unsigned coeff_bits )
{
  double max_abs = 0.0;
  for ( auto w : weights )
    max_abs = std::max( max_abs, std::abs( w ) );
  if ( max_abs == 0.0 )
    return 1.0;
  return static_cast<double>( ( std::int64_t{ 1 } << ( coeff_bits - 1 ) ) - 1 ) / max_abs;
}

quantized_model quantize_model( real_model const& m, fixed_point_spec const& spec )
{
  m.validate();
  spec.validate();

  auto const input_top = static_cast<double>( ( std::int64_t{ 1 } << spec.input_bits ) - 1 );
  auto quantize_weights = [&]( std::span<double const> w, double s ) {
    std::vector<std::int64_t> q( w.size() );
    std::transform( w.begin(), w.end(), q.begin(), [&]( double v ) { return clamp_signed( round_nearest( v * s ), spec.coeff_bits ); } );
    return q;
  };

  quantized_model q;
  q.kind = m.kind;
  q.spec = spec;
  q.n_features = m.n_features;
  q.n_classes = is_classifier( m.kind ) ? m.n_classes : 1;

  if ( !is_mlp( m.kind ) )
  {
    quantized_layer layer;
    layer.input_bits = spec.input_bits;
    for ( auto const& c : m.classifiers )
    {
      quantized_sum s;
      s.scale = symmetric_scale( c.weights, spec.coeff_bits );
      s.weights = quantize_weights( c.weights, s.scale );
      s.intercept = round_nearest( c.intercept * s.scale * input_top );
      s.classes = c.classes;
      layer.sums.push_back( std::move( s ) );
    }
    q.output_scale = layer.sums.front().scale * input_top;
    q.layers.push_back( std::move( layer ) );
    return q;
  }

  /* hidden layer: per-neuron symmetric scale, one shared requantization shift */
  auto const& hidden = m.layers[0];
  quantized_layer h;
  h.act = activation::relu;
  h.input_bits = spec.input_bits;
  std::int64_t max_positive = 0;
  for ( std::size_t j = 0; j < hidden.weights.size(); ++j )
  {
    quantized_sum s;
    s.scale = symmetric_scale( hidden.weights[j], spec.coeff_bits );
    s.weights = quantize_weights( hidden.weights[j], s.scale );
    s.intercept = round_nearest( hidden.intercepts[j] * s.scale * input_top );
    std::int64_t reach = std::max<std::int64_t>( s.intercept, 0 );
    for ( auto w : s.weights )
      reach += std::max<std::int64_t>( w, 0 ) * static_cast<std::int64_t>( input_top );
    max_positive = std::max( max_positive, reach );
    h.sums.push_back( std::move( s ) );
  }
  auto const hidden_top = ( std::int64_t{ 1 } << spec.hidden_bits ) - 1;
  while ( ( max_positive >> h.shift ) > hidden_top )
    ++h.shift;

  /* output layer: hidden units folded into the weights, one scale for the layer
     so that classifier outputs stay comparable under argmax */
  auto const& output = m.layers[1];
  std::vector<std::vector<double>> folded( output.weights.size() );
  std::vector<double> all;
  for ( std::size_t k = 0; k < output.weights.size(); ++k )
  {
    for ( std::size_t j = 0; j < output.weights[k].size(); ++j )
    {
      double const unit = std::ldexp( 1.0, static_cast<int>( h.shift ) ) / ( h.sums[j].scale * input_top );
      folded[k].push_back( output.weights[k][j] * unit );
    }
    all.insert( all.end(), folded[k].begin(), folded[k].end() );
  }
  double const out_scale = symmetric_scale( all, spec.coeff_bits );
  quantized_layer o;
  o.act = activation::none;
  o.input_bits = spec.hidden_bits;
  for ( std::size_t k = 0; k < output.weights.size(); ++k )
  {
    quantized_sum s;
    s.scale = out_scale;
    s.weights = quantize_weights( folded[k], out_scale );
    s.intercept = round_nearest( output.intercepts[k] * out_scale );
    o.sums.push_back( std::move( s ) );
  }
  q.output_scale = out_scale;
  q.layers.push_back( std::move( h ) );
  q.layers.push_back( std::move( o ) );
  return q;
}

std::size_t argmax_lowest( std::span<std::int64_t const> values )
{
  std::size_t best = 0;
  for ( std::size_t i = 1; i < values.size(); ++i )
  {
    if ( values[i] > values[best] )
      best = i;
  }
  return best;
}

inference_result golden_infer( quantized_model const& q, std::span<std::int64_t const> x )
{
  if ( x.size() != static_cast<std::size_t>( q.n_features ) )
    throw data_error( fmt::format( "golden_infer: expected {} inputs, got {}", q.n_features, x.size() ) );
  auto const input_top = ( std::int64_t{ 1 } << q.spec.input_bits ) - 1;
  for ( auto v : x )
  {
    if ( v < 0 || v > input_top )
      throw data_error( fmt::format( "golden_infer: input {} does not fit {} bits", v, q.spec.input_bits ) );
  }

  std::vector<std::int64_t> in( x.begin(), x.end() );
  std::vector<std::int64_t> sums;
  for ( auto const& layer : q.layers )
  {
    sums.clear();
    for ( auto const& s : layer.sums )
    {
      std::int64_t acc = s.intercept;
      for ( std::size_t i = 0; i < in.size(); ++i )
        acc += in[i] * s.weights[i];
      if ( layer.act == activation::relu )
      {
        auto const top = ( std::int64_t{ 1 } << q.spec.hidden_bits ) - 1;
        acc = std::min( std::max<std::int64_t>( acc, 0 ) >> layer.shift, top );
      }
      sums.push_back( acc );
    }
    in = sums;
  }

  inference_result r;
  switch ( q.kind )
  {
  case model_kind::mlp_c:
    r.raw = sums;
    r.decision = static_cast<std::int64_t>( argmax_lowest( r.raw ) );
    break;
  case model_kind::svm_c:
  {
    r.raw.assign( static_cast<std::size_t>( q.n_classes ), 0 );
    auto const& layer = q.layers.front();
    for ( std::size_t c = 0; c < layer.sums.size(); ++c )
    {
      auto const [i, j] = *layer.sums[c].classes;
      ++r.raw[static_cast<std::size_t>( sums[c] >= 0 ? i : j )];
    }
    r.decision = static_cast<std::int64_t>( argmax_lowest( r.raw ) );
    break;
  }
  case model_kind::mlp_r:
  case model_kind::svm_r:
    r.raw = { sums.front() };
    r.decision = sums.front();
    break;
  }
  return r;
}

std::int64_t predicted_label( quantized_model const& q, std::int64_t decision )
{
  if ( is_classifier( q.kind ) )
    return decision;
  return round_nearest( static_cast<double>( decision ) / q.output_scale );
}

double accuracy( quantized_model const& q, std::span<std::int64_t const> decisions, std::span<double const> labels )
{
  if ( decisions.size() != labels.size() )
    throw error( "accuracy: decision and label counts differ" );
  if ( decisions.empty() )
    return 0.0;
  std::size_t hits = 0;
  for ( std::size_t i = 0; i < decisions.size(); ++i )
  {
    if ( predicted_label( q, decisions[i] ) == round_nearest( labels[i] ) )
      ++hits;
  }
  return static_cast<double>( hits ) / static_cast<double>( decisions.size() );
}

/* Serialization */

namespace
{

std::string to_string( activation a )
{
  return a == activation::relu ? "relu" : "none";
}

activation activation_from_string( std::string const& s )
{
  if ( s == "relu" )
    return activation::relu;
  if ( s == "none" || s == "identity" )
    return activation::none;
  throw data_error( fmt::format( "unknown activation '{}'", s ) );
}

nlohmann::json classes_json( std::optional<std::pair<int, int>> const& c )
{
  if ( !c )
    return nullptr;
  return nlohmann::json::array( { c->first, c->second } );
}

std::optional<std::pair<int, int>> classes_from_json( nlohmann::json const& j, std::string const& ctx )
{
  if ( !j.contains( "classes" ) || j["classes"].is_null() )
    return std::nullopt;
  auto const& c = j["classes"];
  if ( !c.is_array() || c.size() != 2 )
    throw data_error( fmt::format( "{}: field 'classes' must be a pair", ctx ) );
  return std::pair{ c[0].get<int>(), c[1].get<int>() };
}

} // namespace

nlohmann::json to_json( real_model const& m )
{
  nlohmann::json j;
  j["format"] = "bespoke-model";
  j["version"] = 1;
  j["kind"] = to_string( m.kind );
  j["n_features"] = m.n_features;
  j["n_classes"] = m.n_classes;
  if ( is_mlp( m.kind ) )
  {
    j["layers"] = nlohmann::json::array();
    for ( auto const& l : m.layers )
      j["layers"].push_back( { { "weights", l.weights }, { "intercepts", l.intercepts }, { "activation", to_string( l.act ) } } );
  }
  else
  {
    j["classifiers"] = nlohmann::json::array();
    for ( auto const& c : m.classifiers )
      j["classifiers"].push_back( { { "weights", c.weights }, { "intercept", c.intercept }, { "classes", classes_json( c.classes ) } } );
  }
  return j;
}

real_model real_model_from_json( nlohmann::json const& j )
{
  return json_guard( "model", [&] {
    real_model m;
    m.kind = model_kind_from_string( require( j, "kind", "model" ).get<std::string>() );
    m.n_features = require( j, "n_features", "model" ).get<int>();
    m.n_classes = j.value( "n_classes", 1 );
    if ( is_mlp( m.kind ) )
    {
      auto const& layers = require( j, "layers", "model" );
      for ( std::size_t l = 0; l < layers.size(); ++l )
      {
        auto const ctx = fmt::format( "model.layers[{}]", l );
        real_layer layer;
        layer.weights = require( layers[l], "weights", ctx ).get<std::vector<std::vector<double>>>();
        layer.intercepts = require( layers[l], "intercepts", ctx ).get<std::vector<double>>();
        layer.act = activation_from_string( require( layers[l], "activation", ctx ).get<std::string>() );
        m.layers.push_back( std::move( layer ) );
      }
    }
    else
    {
      auto const& cls = require( j, "classifiers", "model" );
      for ( std::size_t i = 0; i < cls.size(); ++i )
      {
        auto const ctx = fmt::format( "model.classifiers[{}]", i );
        real_classifier c;
        c.weights = require( cls[i], "weights", ctx ).get<std::vector<double>>();
        c.intercept = require( cls[i], "intercept", ctx ).get<double>();
        c.classes = classes_from_json( cls[i], ctx );
        m.classifiers.push_back( std::move( c ) );
      }
    }
    m.validate();
    return m;
  } );
}

real_model load_real_model( std::filesystem::path const& path )
{
  return real_model_from_json( read_json_file( path ) );
}

nlohmann::json to_json( quantized_model const& q )
{
  nlohmann::json j;
  j["format"] = "bespoke-quantized-model";
  j["version"] = 1;
  j["kind"] = to_string( q.kind );
  j["n_features"] = q.n_features;
  j["n_classes"] = q.n_classes;
  j["spec"] = { { "input_bits", q.spec.input_bits }, { "coeff_bits", q.spec.coeff_bits }, { "hidden_bits", q.spec.hidden_bits } };
  j["output_scale"] = q.output_scale;
  j["layers"] = nlohmann::json::array();
  for ( auto const& l : q.layers )
  {
    nlohmann::json lj{ { "activation", to_string( l.act ) }, { "input_bits", l.input_bits }, { "shift", l.shift } };
    lj["sums"] = nlohmann::json::array();
    for ( auto const& s : l.sums )
      lj["sums"].push_back( { { "weights", s.weights }, { "intercept", s.intercept }, { "scale", s.scale }, { "classes", classes_json( s.classes ) } } );
    j["layers"].push_back( std::move( lj ) );
  }
  if ( q.provenance )
  {
    auto const& p = *q.provenance;
    j["provenance"] = { { "e", p.e },
                        { "error_sums", p.error_sums },
                        { "proxy_area_before", p.proxy_area_before },
                        { "proxy_area_after", p.proxy_area_after } };
  }
  return j;
}

quantized_model quantized_model_from_json( nlohmann::json const& j )
{
  return json_guard( "quantized model", [&] {
    quantized_model q;
    q.kind = model_kind_from_string( require( j, "kind", "quantized model" ).get<std::string>() );
    q.n_features = require( j, "n_features", "quantized model" ).get<int>();
    q.n_classes = require( j, "n_classes", "quantized model" ).get<int>();
    auto const& spec = require( j, "spec", "quantized model" );
    q.spec.input_bits = require( spec, "input_bits", "spec" ).get<unsigned>();
    q.spec.coeff_bits = require( spec, "coeff_bits", "spec" ).get<unsigned>();
    q.spec.hidden_bits = require( spec, "hidden_bits", "spec" ).get<unsigned>();
    q.output_scale = require( j, "output_scale", "quantized model" ).get<double>();
    auto const& layers = require( j, "layers", "quantized model" );
    for ( std::size_t l = 0; l < layers.size(); ++l )
    {
      auto const ctx = fmt::format( "layers[{}]", l );
      quantized_layer layer;
      layer.act = activation_from_string( require( layers[l], "activation", ctx ).get<std::string>() );
      layer.input_bits = require( layers[l], "input_bits", ctx ).get<unsigned>();
      layer.shift = require( layers[l], "shift", ctx ).get<unsigned>();
      auto const& sums = require( layers[l], "sums", ctx );
      for ( std::size_t i = 0; i < sums.size(); ++i )
      {
        auto const sctx = fmt::format( "{}.sums[{}]", ctx, i );
        quantized_sum s;
        s.weights = require( sums[i], "weights", sctx ).get<std::vector<std::int64_t>>();
        s.intercept = require( sums[i], "intercept", sctx ).get<std::int64_t>();
        s.scale = require( sums[i], "scale", sctx ).get<double>();
        s.classes = classes_from_json( sums[i], sctx );
        layer.sums.push_back( std::move( s ) );
      }
      q.layers.push_back( std::move( layer ) );
    }
    if ( j.contains( "provenance" ) )
    {
      auto const& p = j["provenance"];
      approx_provenance prov;
      prov.e = require( p, "e", "provenance" ).get<int>();
      prov.error_sums = require( p, "error_sums", "provenance" ).get<std::vector<std::int64_t>>();
      prov.proxy_area_before = require( p, "proxy_area_before", "provenance" ).get<std::vector<double>>();
      prov.proxy_area_after = require( p, "proxy_area_after", "provenance" ).get<std::vector<double>>();
      q.provenance = std::move( prov );
    }
    q.validate();
    return q;
  } );
}

quantized_model load_quantized_model( std::filesystem::path const& path )
{
  return quantized_model_from_json( read_json_file( path ) );
}

std::string serialize( quantized_model const& q )
{
  return to_json( q ).dump( 2 ) + "\n";
}

} // namespace bespoke
