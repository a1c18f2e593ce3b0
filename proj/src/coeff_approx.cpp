#include "bespoke/coeff_approx.hpp"

#include <algorithm>
#include <cstdlib>
#include <limits>

#include <fmt/format.h>

#include "bespoke/error.hpp"

namespace bespoke
{

namespace
{

struct best_in_segment
{
  std::int64_t value;
  double area;
};

best_in_segment scan( std::int64_t w, std::int64_t lo, std::int64_t hi, unsigned input_bits, area_cache& cache )
{
  best_in_segment best{ w, cache.get( w, input_bits ) };
  for ( auto v = lo; v <= hi; ++v )
  {
    auto const a = cache.get( v, input_bits );
    auto const d = std::abs( v - w ), best_d = std::abs( best.value - w );
    if ( a < best.area || ( a == best.area && ( d < best_d || ( d == best_d && std::abs( v ) < std::abs( best.value ) ) ) ) )
      best = { v, a };
  }
  return best;
}

} // namespace

std::vector<candidate_pair> build_candidates( std::span<std::int64_t const> weights, int e, unsigned input_bits,
                                              area_cache& cache )
{
  if ( e < 0 )
    throw error( fmt::format( "approximation threshold must be nonnegative, got {}", e ) );
  auto const c = cache.coeff_bits();
  auto const lo = -( std::int64_t{ 1 } << ( c - 1 ) );
  auto const hi = ( std::int64_t{ 1 } << ( c - 1 ) ) - 1;

  std::vector<candidate_pair> pairs;
  pairs.reserve( weights.size() );
  for ( std::size_t i = 0; i < weights.size(); ++i )
  {
    auto const w = weights[i];
    if ( w < lo || w > hi )
      throw error( fmt::format( "coefficient {} outside signed {}-bit range", w, c ) );
    auto const up = scan( w, w, std::min( hi, w + e ), input_bits, cache );
    auto const down = scan( w, std::max( lo, w - e ), w, input_bits, cache );
    pairs.push_back( candidate_pair{ i, w, up.value, down.value, cache.get( w, input_bits ), up.area, down.area } );
  }
  return pairs;
}

coeff_selection select_config( std::span<candidate_pair const> pairs )
{
  if ( pairs.empty() )
    throw error( "select_config: no coefficients" );

  // reachable error sums live in [-bound, bound]
  std::int64_t bound = 0;
  for ( auto const& p : pairs )
    bound += std::max( std::abs( p.w - p.w_minus ), std::abs( p.w - p.w_plus ) );
  auto const width = static_cast<std::size_t>( 2 * bound + 1 );
  auto const inf = std::numeric_limits<double>::infinity();

  std::vector<double> cost( width, inf ), next( width );
  cost[static_cast<std::size_t>( bound )] = 0.0;
  // choice[i][s]: candidate taken at step i to reach offset s (0 = w_minus, 1 = w_plus)
  std::vector<std::vector<std::uint8_t>> choice( pairs.size(), std::vector<std::uint8_t>( width, 0 ) );

  for ( std::size_t i = 0; i < pairs.size(); ++i )
  {
    std::fill( next.begin(), next.end(), inf );
    auto const& p = pairs[i];
    std::int64_t const err[2] = { p.w - p.w_minus, p.w - p.w_plus };
    double const area[2] = { p.area_minus, p.area_plus };
    for ( std::size_t s = 0; s < width; ++s )
    {
      if ( cost[s] == inf )
        continue;
      for ( std::uint8_t k = 0; k < 2; ++k )
      {
        auto const t = static_cast<std::size_t>( static_cast<std::int64_t>( s ) + err[k] );
        auto const c = cost[s] + area[k];
        if ( c < next[t] )
        {
          next[t] = c;
          choice[i][t] = k;
        }
      }
    }
    std::swap( cost, next );
  }

  std::optional<std::size_t> best;
  for ( std::size_t s = 0; s < width; ++s )
  {
    if ( cost[s] == inf )
      continue;
    if ( !best )
    {
      best = s;
      continue;
    }
    auto const mag = std::abs( static_cast<std::int64_t>( s ) - bound );
    auto const best_mag = std::abs( static_cast<std::int64_t>( *best ) - bound );
    if ( mag < best_mag || ( mag == best_mag && cost[s] < cost[*best] ) ||
         ( mag == best_mag && cost[s] == cost[*best] && s > *best ) )
      best = s;
  }

  coeff_selection sel;
  sel.weights.resize( pairs.size() );
  sel.error_sum = static_cast<std::int64_t>( *best ) - bound;
  sel.area = cost[*best];
  auto s = static_cast<std::int64_t>( *best );
  for ( std::size_t i = pairs.size(); i-- > 0; )
  {
    auto const& p = pairs[i];
    auto const k = choice[i][static_cast<std::size_t>( s )];
    sel.weights[i] = k == 0 ? p.w_minus : p.w_plus;
    s -= p.w - sel.weights[i];
  }
  return sel;
}

quantized_model approximate_model( quantized_model const& q, int e, area_cache& cache )
{
  q.validate();
  if ( cache.coeff_bits() != q.spec.coeff_bits )
    throw error( fmt::format( "area cache is for {}-bit coefficients but the model uses {}", cache.coeff_bits(),
                              q.spec.coeff_bits ) );

  struct job
  {
    std::size_t layer;
    std::size_t sum;
  };
  std::vector<job> jobs;
  for ( std::size_t l = 0; l < q.layers.size(); ++l )
  {
    for ( std::size_t s = 0; s < q.layers[l].sums.size(); ++s )
      jobs.push_back( { l, s } );
  }

  std::vector<coeff_selection> results( jobs.size() );
  std::vector<double> before( jobs.size() );
  std::exception_ptr failure;
#pragma omp parallel for schedule( dynamic )
  for ( std::size_t j = 0; j < jobs.size(); ++j )
  {
    try
    {
      auto const& layer = q.layers[jobs[j].layer];
      auto const& w = layer.sums[jobs[j].sum].weights;
      auto const pairs = build_candidates( w, e, layer.input_bits, cache );
      double a = 0.0;
      for ( auto const& p : pairs )
        a += p.area_w;
      before[j] = a;
      results[j] = select_config( pairs );
    }
    catch ( ... )
    {
#pragma omp critical
      failure = std::current_exception();
    }
  }
  if ( failure )
    std::rethrow_exception( failure );

  quantized_model out = q;
  approx_provenance prov;
  prov.e = e;
  for ( std::size_t j = 0; j < jobs.size(); ++j )
  {
    out.layers[jobs[j].layer].sums[jobs[j].sum].weights = results[j].weights;
    prov.error_sums.push_back( results[j].error_sum );
    prov.proxy_area_before.push_back( before[j] );
    prov.proxy_area_after.push_back( results[j].area );
  }
  out.provenance = std::move( prov );
  return out;
}

} // namespace bespoke
