#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <shared_mutex>
#include <span>
#include <utility>
#include <vector>

#include "bespoke/cell_library.hpp"
#include "bespoke/model.hpp"
#include "bespoke/netlist.hpp"

namespace bespoke
{

/*! \brief Coefficient multiplier x * w with x an unsigned `input_bits` bus "x".
 *
 * Built as a shift-add network over the canonical signed digit form of w and
 * then optimized. The output bus "p" is signed, input_bits + coeff_bits wide.
 */
netlist gen_mult_const( std::int64_t w, unsigned input_bits, cell_library const& lib, unsigned coeff_bits = 8 );

/*! \brief Array multiplier with the coefficient as a signed input bus "w"; the
 *  reference a bespoke multiplier is compared against. */
netlist gen_conventional_mult( unsigned input_bits, unsigned coeff_bits, cell_library const& lib );

/*! \brief AREA(BM_w), computed without memoization. */
double area_bm( std::int64_t w, unsigned input_bits, cell_library const& lib, unsigned coeff_bits = 8 );

/*! \brief Memoized AREA(BM_w) keyed by (w, input width) for one library.
 *
 * Safe for concurrent callers. With a cache directory the table is loaded at
 * construction and `save` publishes it atomically (write + rename) to a file
 * named after the library hash, so concurrent processes never observe a
 * partial table.
 */
class area_cache
{
public:
  explicit area_cache( cell_library const& lib, unsigned coeff_bits = 8, std::filesystem::path dir = {} );

  double get( std::int64_t w, unsigned input_bits );
  void save() const;

  std::size_t size() const;
  std::filesystem::path const& file() const { return file_; }
  cell_library const& library() const { return *lib_; }
  unsigned coeff_bits() const { return coeff_bits_; }

private:
  cell_library const* lib_;
  unsigned coeff_bits_;
  std::filesystem::path file_;
  mutable std::shared_mutex mutex_;
  std::map<std::pair<unsigned, std::int64_t>, double> table_;
};

struct weighted_sum_spec
{
  std::vector<std::int64_t> weights;
  std::int64_t intercept{ 0 };
  unsigned input_bits{ 4 };
  unsigned coeff_bits{ 8 };
};

/*! \brief Width of a weighted-sum result: u + c + ceil(log2 N) + 1, widened if
 *  the intercept needs more. */
unsigned weighted_sum_width( weighted_sum_spec const& spec );

/*! \brief S = sum_i x_i * w_i + intercept over unsigned input buses x0..x{N-1};
 *  signed output bus "s". */
netlist gen_weighted_sum( weighted_sum_spec const& spec, cell_library const& lib );

/*! \brief Comparator tree over inputs v0..v{k-1}; output "index" holds the
 *  lowest index of the maximum. Every gate is a decision gate. */
netlist gen_argmax( unsigned k, unsigned width, bool is_signed, cell_library const& lib );

/*! \brief Fully parallel bespoke datapath of a quantized model, optimized.
 *
 * Inputs x0..x{n-1}. Regressors drive the signed output "y" with the raw
 * final sum. Classifiers drive "class" and record the argmax inputs as
 * tracked buses O0..O{k-1} (output neurons for MLPs, vote counts for SVMs).
 */
netlist gen_model_circuit( quantized_model const& q, cell_library const& lib );

/*! \brief Width of the per-class vote counters: ceil(log2 k) + 1. */
unsigned vote_width( unsigned k );

unsigned ceil_log2( std::uint64_t v );

} // namespace bespoke
