#include "bespoke/synth.hpp"

#include <algorithm>
#include <fstream>
#include <mutex>
#include <optional>
#include <utility>
#include <sstream>

#include <fmt/format.h>

#include "bespoke/error.hpp"
#include "bespoke/json_util.hpp"
#include "bespoke/optimize.hpp"

namespace bespoke
{

unsigned ceil_log2( std::uint64_t v )
{
  unsigned k = 0;
  while ( ( std::uint64_t{ 1 } << k ) < v )
    ++k;
  return k;
}

unsigned vote_width( unsigned k )
{
  return ceil_log2( k ) + 1;
}

namespace
{

using word = std::vector<net_id>; // least significant bit first

/* Emits generic gates into a netlist; constants are left for the optimizer. */
class builder
{
public:
  explicit builder( netlist& n ) : n_( n ) {}

  net_id make( char const* cell, std::vector<net_id> ins )
  {
    auto const out = n_.add_net();
    auto const id = n_.add_gate( cell, std::move( ins ), out );
    if ( recording_ )
      recorded_.push_back( id );
    return out;
  }

  net_id inv( net_id a ) { return make( "INV", { a } ); }
  net_id and2( net_id a, net_id b ) { return make( "AND2", { a, b } ); }
  net_id or2( net_id a, net_id b ) { return make( "OR2", { a, b } ); }
  net_id xor2( net_id a, net_id b ) { return make( "XOR2", { a, b } ); }
  net_id mux2( net_id a, net_id b, net_id s ) { return make( "MUX2", { a, b, s } ); } // s ? b : a

  static word constant( std::int64_t value, std::size_t width )
  {
    word w( width );
    for ( std::size_t i = 0; i < width; ++i )
      w[i] = const_net( i < 64 ? ( ( static_cast<std::uint64_t>( value ) >> i ) & 1u ) : value < 0 );
    return w;
  }

  static word extend( word a, std::size_t width, bool is_signed )
  {
    net_id const fill = is_signed && !a.empty() ? a.back() : const0_net;
    a.resize( width, fill );
    return a;
  }

  static word shift_left( word const& a, std::size_t k, std::size_t width )
  {
    word out( k, const0_net );
    out.insert( out.end(), a.begin(), a.end() );
    return extend( std::move( out ), width, false );
  }

  /* Ripple-carry a + b + cin, both operands extended to `width`; result truncated to `width`. */
  word add( word const& a, bool a_signed, word const& b, bool b_signed, std::size_t width, net_id cin = const0_net )
  {
    auto const x = extend( a, width, a_signed );
    auto const y = extend( b, width, b_signed );
    word sum( width );
    net_id carry = cin;
    for ( std::size_t i = 0; i < width; ++i )
    {
      auto const p = xor2( x[i], y[i] );
      sum[i] = xor2( p, carry );
      if ( i + 1 < width )
        carry = mux2( x[i], carry, p );
    }
    return sum;
  }

  /* a - b as a + ~b + 1. */
  word sub( word const& a, bool a_signed, word const& b, bool b_signed, std::size_t width )
  {
    auto y = extend( b, width, b_signed );
    for ( auto& bit : y )
      bit = inv( bit );
    return add( a, a_signed, y, false, width, const1_net );
  }

  void begin_record()
  {
    recording_ = true;
  }

  std::vector<gate_id> end_record()
  {
    recording_ = false;
    return std::exchange( recorded_, {} );
  }

private:
  netlist& n_;
  bool recording_{ false };
  std::vector<gate_id> recorded_;
};

/* Canonical signed digits of w, least significant first, digits in {-1, 0, 1}. */
std::vector<int> csd_digits( std::int64_t w )
{
  std::vector<int> digits;
  while ( w != 0 )
  {
    int d = 0;
    if ( w & 1 )
    {
      d = ( ( w % 4 ) + 4 ) % 4 == 1 ? 1 : -1;
      w -= d;
    }
    digits.push_back( d );
    w /= 2;
  }
  return digits;
}

/* x * w in `width` bits (two's complement, exact while the product fits). */
word build_mult_const( builder& b, word const& x, std::int64_t w, std::size_t width )
{
  auto const digits = csd_digits( w );
  std::optional<word> acc;
  for ( std::size_t k = 0; k < digits.size(); ++k )
  {
    if ( digits[k] != 1 )
      continue;
    auto term = builder::shift_left( x, k, width );
    acc = acc ? b.add( *acc, true, term, false, width ) : std::move( term );
  }
  if ( !acc )
    acc = builder::constant( 0, width );
  for ( std::size_t k = 0; k < digits.size(); ++k )
  {
    if ( digits[k] == -1 )
      acc = b.sub( *acc, true, builder::shift_left( x, k, width ), false, width );
  }
  return *acc;
}

unsigned signed_bits_for( std::int64_t lo, std::int64_t hi )
{
  unsigned w = 1;
  while ( lo < -( std::int64_t{ 1 } << ( w - 1 ) ) || hi > ( std::int64_t{ 1 } << ( w - 1 ) ) - 1 )
    ++w;
  return w;
}

/* Bespoke multipliers feeding a balanced adder tree, then the intercept. */
word build_weighted_sum( builder& b, std::vector<word> const& xs, weighted_sum_spec const& spec )
{
  auto const product_width = spec.input_bits + spec.coeff_bits;
  std::vector<word> level;
  for ( std::size_t i = 0; i < xs.size(); ++i )
    level.push_back( build_mult_const( b, xs[i], spec.weights[i], product_width ) );

  while ( level.size() > 1 )
  {
    std::vector<word> next;
    for ( std::size_t i = 0; i + 1 < level.size(); i += 2 )
    {
      auto const width = std::max( level[i].size(), level[i + 1].size() ) + 1;
      next.push_back( b.add( level[i], true, level[i + 1], true, width ) );
    }
    if ( level.size() % 2 )
      next.push_back( level.back() );
    level = std::move( next );
  }
  auto const width = weighted_sum_width( spec );
  return b.add( level.front(), true, builder::constant( spec.intercept, width ), true, width );
}

/* Strictly greater: b > a. */
net_id greater( builder& b, word const& rhs, word const& lhs, bool is_signed )
{
  auto const width = std::max( lhs.size(), rhs.size() ) + 1;
  auto const diff = b.sub( lhs, is_signed, rhs, is_signed, width );
  return diff.back();
}

struct argmax_node
{
  word value;
  word index;
};

argmax_node build_argmax( builder& b, std::vector<word> const& values, std::size_t lo, std::size_t hi, bool is_signed, std::size_t index_bits )
{
  if ( hi - lo == 1 )
    return { values[lo], builder::constant( static_cast<std::int64_t>( lo ), index_bits ) };
  auto const mid = lo + ( hi - lo + 1 ) / 2;
  auto const left = build_argmax( b, values, lo, mid, is_signed, index_bits );
  auto const right = build_argmax( b, values, mid, hi, is_signed, index_bits );
  // ties keep the left (lower index) side
  auto const pick_right = greater( b, right.value, left.value, is_signed );
  auto const width = std::max( left.value.size(), right.value.size() );
  auto const lv = builder::extend( left.value, width, is_signed );
  auto const rv = builder::extend( right.value, width, is_signed );
  argmax_node out;
  for ( std::size_t i = 0; i < width; ++i )
    out.value.push_back( b.mux2( lv[i], rv[i], pick_right ) );
  for ( std::size_t i = 0; i < index_bits; ++i )
    out.index.push_back( b.mux2( left.index[i], right.index[i], pick_right ) );
  return out;
}

word build_popcount( builder& b, std::vector<net_id> const& bits, std::size_t width )
{
  if ( bits.empty() )
    return builder::constant( 0, width );
  std::vector<word> level;
  for ( auto bit : bits )
    level.push_back( { bit } );
  while ( level.size() > 1 )
  {
    std::vector<word> next;
    for ( std::size_t i = 0; i + 1 < level.size(); i += 2 )
    {
      auto const w = std::max( level[i].size(), level[i + 1].size() ) + 1;
      next.push_back( b.add( level[i], false, level[i + 1], false, w ) );
    }
    if ( level.size() % 2 )
      next.push_back( level.back() );
    level = std::move( next );
  }
  auto out = builder::extend( level.front(), width, false );
  out.resize( width );
  return out;
}

/* ReLU (AND with the inverted sign), arithmetic right shift, saturation into `bits` unsigned bits. */
word build_relu_requantize( builder& b, word const& s, unsigned shift, unsigned bits )
{
  auto const positive = b.inv( s.back() );
  word relu;
  for ( std::size_t i = 0; i + 1 < s.size(); ++i )
    relu.push_back( b.and2( s[i], positive ) );
  word shifted;
  for ( std::size_t i = shift; i < relu.size(); ++i )
    shifted.push_back( relu[i] );
  if ( shifted.size() <= bits )
    return builder::extend( std::move( shifted ), bits, false );
  net_id overflow = shifted[bits];
  for ( std::size_t i = bits + 1; i < shifted.size(); ++i )
    overflow = b.or2( overflow, shifted[i] );
  word out;
  for ( std::size_t i = 0; i < bits; ++i )
    out.push_back( b.or2( shifted[i], overflow ) );
  return out;
}

void check_coefficient( std::int64_t w, unsigned coeff_bits )
{
  auto const lo = -( std::int64_t{ 1 } << ( coeff_bits - 1 ) );
  auto const hi = ( std::int64_t{ 1 } << ( coeff_bits - 1 ) ) - 1;
  if ( w < lo || w > hi )
    throw error( fmt::format( "coefficient {} outside signed {}-bit range", w, coeff_bits ) );
}

bus make_input( netlist& n, std::string name, unsigned width )
{
  return bus{ std::move( name ), n.add_nets( width ), false };
}

} // namespace

netlist gen_mult_const( std::int64_t w, unsigned input_bits, cell_library const& lib, unsigned coeff_bits )
{
  check_coefficient( w, coeff_bits );
  netlist n;
  n.name = fmt::format( "bm_{}_u{}", w, input_bits );
  builder b( n );
  n.inputs.push_back( make_input( n, "x", input_bits ) );
  auto const p = build_mult_const( b, n.inputs[0].bits, w, input_bits + coeff_bits );
  n.outputs.push_back( bus{ "p", p, true } );
  return optimize( n, lib );
}

netlist gen_conventional_mult( unsigned input_bits, unsigned coeff_bits, cell_library const& lib )
{
  netlist n;
  n.name = fmt::format( "mult_{}x{}", input_bits, coeff_bits );
  builder b( n );
  n.inputs.push_back( make_input( n, "x", input_bits ) );
  n.inputs.push_back( make_input( n, "w", coeff_bits ) );
  n.inputs.back().is_signed = true;
  auto const& x = n.inputs[0].bits;
  auto const& w = n.inputs[1].bits;
  std::size_t const width = input_bits + coeff_bits;

  auto row = [&]( std::size_t j ) {
    word pp;
    for ( auto xi : x )
      pp.push_back( b.and2( xi, w[j] ) );
    return builder::shift_left( pp, j, width );
  };
  auto acc = row( 0 );
  for ( std::size_t j = 1; j + 1 < coeff_bits; ++j )
    acc = b.add( acc, true, row( j ), false, width );
  acc = b.sub( acc, true, row( coeff_bits - 1 ), false, width );
  n.outputs.push_back( bus{ "p", acc, true } );
  return optimize( n, lib );
}

double area_bm( std::int64_t w, unsigned input_bits, cell_library const& lib, unsigned coeff_bits )
{
  return area( gen_mult_const( w, input_bits, lib, coeff_bits ), lib ).total_area;
}

area_cache::area_cache( cell_library const& lib, unsigned coeff_bits, std::filesystem::path dir )
    : lib_( &lib ), coeff_bits_( coeff_bits )
{
  if ( dir.empty() )
    return;
  file_ = dir / fmt::format( "area_bm_{}_c{}.tsv", lib.hash(), coeff_bits );
  std::ifstream in( file_ );
  std::string line;
  while ( std::getline( in, line ) )
  {
    std::istringstream ss( line );
    unsigned u{};
    std::int64_t w{};
    double a{};
    if ( ss >> u >> w >> a )
      table_[{ u, w }] = a;
  }
}

double area_cache::get( std::int64_t w, unsigned input_bits )
{
  {
    std::shared_lock lock( mutex_ );
    if ( auto const it = table_.find( { input_bits, w } ); it != table_.end() )
      return it->second;
  }
  auto const a = area_bm( w, input_bits, *lib_, coeff_bits_ );
  std::unique_lock lock( mutex_ );
  table_.emplace( std::pair{ input_bits, w }, a );
  return a;
}

void area_cache::save() const
{
  if ( file_.empty() )
    return;
  std::string text;
  {
    std::shared_lock lock( mutex_ );
    for ( auto const& [key, a] : table_ )
      text += fmt::format( "{}\t{}\t{}\n", key.first, key.second, a );
  }
  write_text_file( file_, text );
}

std::size_t area_cache::size() const
{
  std::shared_lock lock( mutex_ );
  return table_.size();
}

unsigned weighted_sum_width( weighted_sum_spec const& spec )
{
  auto const n = spec.weights.size();
  unsigned const nominal = spec.input_bits + spec.coeff_bits + ceil_log2( n ) + 1;
  auto const top = ( std::int64_t{ 1 } << spec.input_bits ) - 1;
  std::int64_t lo = spec.intercept, hi = spec.intercept;
  for ( auto w : spec.weights )
  {
    lo += std::min<std::int64_t>( w, 0 ) * top;
    hi += std::max<std::int64_t>( w, 0 ) * top;
  }
  return std::max( nominal, signed_bits_for( lo, hi ) );
}

netlist gen_weighted_sum( weighted_sum_spec const& spec, cell_library const& lib )
{
  if ( spec.weights.empty() )
    throw error( "gen_weighted_sum: at least one coefficient is required" );
  for ( auto w : spec.weights )
    check_coefficient( w, spec.coeff_bits );
  netlist n;
  n.name = fmt::format( "wsum_n{}", spec.weights.size() );
  builder b( n );
  std::vector<word> xs;
  for ( std::size_t i = 0; i < spec.weights.size(); ++i )
  {
    n.inputs.push_back( make_input( n, fmt::format( "x{}", i ), spec.input_bits ) );
    xs.push_back( n.inputs.back().bits );
  }
  n.outputs.push_back( bus{ "s", build_weighted_sum( b, xs, spec ), true } );
  return optimize( n, lib );
}

netlist gen_argmax( unsigned k, unsigned width, bool is_signed, cell_library const& lib )
{
  if ( k < 2 )
    throw error( "gen_argmax: needs at least two inputs" );
  netlist n;
  n.name = fmt::format( "argmax_{}x{}", k, width );
  builder b( n );
  std::vector<word> values;
  for ( unsigned i = 0; i < k; ++i )
  {
    n.inputs.push_back( bus{ fmt::format( "v{}", i ), n.add_nets( width ), is_signed } );
    values.push_back( n.inputs.back().bits );
  }
  b.begin_record();
  auto const root = build_argmax( b, values, 0, k, is_signed, ceil_log2( k ) );
  n.decision_gates = b.end_record();
  n.outputs.push_back( bus{ "index", root.index, false } );
  return optimize( n, lib );
}

netlist gen_model_circuit( quantized_model const& q, cell_library const& lib )
{
  q.validate();
  for ( auto const* required : { "INV", "AND2", "OR2", "XOR2", "MUX2" } )
  {
    if ( !lib.find( required ) )
      throw error( fmt::format( "library '{}' lacks cell '{}' needed for generation", lib.name(), required ) );
  }

  netlist n;
  n.name = to_string( q.kind );
  n.role = is_classifier( q.kind ) ? circuit_role::classifier : circuit_role::regressor;
  builder b( n );
  std::vector<word> xs;
  for ( int i = 0; i < q.n_features; ++i )
  {
    n.inputs.push_back( make_input( n, fmt::format( "x{}", i ), q.spec.input_bits ) );
    xs.push_back( n.inputs.back().bits );
  }

  auto layer_sums = [&]( quantized_layer const& layer, std::vector<word> const& in ) {
    std::vector<word> out;
    for ( auto const& s : layer.sums )
      out.push_back( build_weighted_sum( b, in, weighted_sum_spec{ s.weights, s.intercept, layer.input_bits, q.spec.coeff_bits } ) );
    return out;
  };

  std::vector<word> outputs;
  std::vector<word> tracked;
  bool tracked_signed = true;
  std::vector<gate_id> decision;

  if ( is_mlp( q.kind ) )
  {
    auto const hidden_sums = layer_sums( q.layers[0], xs );
    std::vector<word> hidden;
    for ( auto const& s : hidden_sums )
      hidden.push_back( build_relu_requantize( b, s, q.layers[0].shift, q.spec.hidden_bits ) );
    outputs = layer_sums( q.layers[1], hidden );
  }
  else
    outputs = layer_sums( q.layers[0], xs );

  if ( q.kind == model_kind::svm_c )
  {
    auto const k = static_cast<unsigned>( q.n_classes );
    std::vector<std::vector<net_id>> votes( k );
    auto const& sums = q.layers[0].sums;
    b.begin_record();
    for ( std::size_t c = 0; c < sums.size(); ++c )
    {
      auto const [i, j] = *sums[c].classes;
      auto const sign = outputs[c].back();
      votes[static_cast<std::size_t>( i )].push_back( b.inv( sign ) ); // S >= 0 votes i
      votes[static_cast<std::size_t>( j )].push_back( sign );
    }
    decision = b.end_record();
    for ( auto const& v : votes )
      tracked.push_back( build_popcount( b, v, vote_width( k ) ) );
    tracked_signed = false;
  }
  else if ( q.kind == model_kind::mlp_c )
    tracked = outputs;

  if ( is_classifier( q.kind ) )
  {
    b.begin_record();
    auto const root = build_argmax( b, tracked, 0, tracked.size(), tracked_signed, ceil_log2( tracked.size() ) );
    auto const argmax_gates = b.end_record();
    decision.insert( decision.end(), argmax_gates.begin(), argmax_gates.end() );
    std::sort( decision.begin(), decision.end() );
    n.decision_gates = decision;
    n.outputs.push_back( bus{ "class", root.index, false } );
    for ( std::size_t i = 0; i < tracked.size(); ++i )
      n.tracked.push_back( bus{ fmt::format( "O{}", i ), tracked[i], tracked_signed } );
  }
  else
    n.outputs.push_back( bus{ "y", outputs.front(), true } );

  return optimize( n, lib );
}

} // namespace bespoke
