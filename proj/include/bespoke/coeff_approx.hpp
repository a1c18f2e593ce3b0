#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "bespoke/model.hpp"
#include "bespoke/synth.hpp"

namespace bespoke
{

/*! \brief The two replacement candidates R_i of one coefficient.
 *
 * `w_minus` is the cheapest value in [w, w+e] and `w_plus` the cheapest in
 * [w-e, w], both clipped to the signed coefficient range. Their errors
 * w - w~ are therefore nonpositive and nonnegative respectively.
 */
struct candidate_pair
{
  std::size_t index{ 0 };
  std::int64_t w{ 0 };
  std::int64_t w_minus{ 0 };
  std::int64_t w_plus{ 0 };
  double area_w{ 0.0 };
  double area_minus{ 0.0 };
  double area_plus{ 0.0 };
};

std::vector<candidate_pair> build_candidates( std::span<std::int64_t const> weights, int e, unsigned input_bits,
                                              area_cache& cache );

struct coeff_selection
{
  std::vector<std::int64_t> weights;
  std::int64_t error_sum{ 0 }; // sum_i (w_i - w~_i)
  double area{ 0.0 };          // sum_i AREA(BM_w~_i)
};

/*! \brief Chooses one candidate per coefficient minimizing |error sum|, then proxy area.
 *
 * Exact dynamic program over the reachable error sums. Remaining ties prefer
 * a positive sum.
 */
coeff_selection select_config( std::span<candidate_pair const> pairs );

/*! \brief Replaces the coefficients of every weighted sum; intercepts are kept.
 *
 * The cache's coefficient width must equal the model's. The result carries
 * provenance with per-sum error sums and proxy areas, flattened layer by layer.
 */
quantized_model approximate_model( quantized_model const& q, int e, area_cache& cache );

} // namespace bespoke
