#pragma once

#include "bespoke/cell_library.hpp"
#include "bespoke/netlist.hpp"

namespace bespoke
{

struct optimize_stats
{
  std::size_t iterations{ 0 };
  std::size_t constants{ 0 };  // gates replaced by CONST0/CONST1
  std::size_t identities{ 0 }; // gates forwarded or rewritten to a smaller cell
  std::size_t inverters{ 0 };  // double-inverter collapses
  std::size_t merged{ 0 };     // structural hashing merges
  std::size_t dead{ 0 };       // dead gates removed
};

/*! \brief Local rewriting to a fixpoint.
 *
 * Visits gates in topological order and applies, per gate: constant
 * propagation, truth-table driven identity rewrites (a gate whose function
 * collapses onto fewer distinct inputs is forwarded or mapped to the cheapest
 * library cell of no larger area), double-inverter collapse, and structural
 * hashing (symmetric cells have their inputs sorted first). Gates that reach
 * no primary output or tracked bus are then removed. Surviving gates keep
 * their ids; merging into a survivor transfers decision-gate membership.
 *
 * The result is functionally equivalent on all primary inputs, never larger
 * in area, and a fixpoint: optimizing it again returns an identical netlist.
 */
netlist optimize( netlist const& n, cell_library const& lib, optimize_stats* stats = nullptr );

} // namespace bespoke
