#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "bespoke/cell_library.hpp"
#include "bespoke/model.hpp"
#include "bespoke/netlist.hpp"
#include "bespoke/prune.hpp"
#include "bespoke/sim.hpp"
#include "bespoke/synth.hpp"

namespace bespoke
{

enum class stage
{
  exact,
  coeff_only,
  prune_only,
  cross
};

std::string to_string( stage s );
stage stage_from_string( std::string const& s );

struct design_point
{
  stage kind{ stage::exact };
  int e{ 0 };
  std::optional<double> tau_c;
  std::optional<int> phi_c;
  double accuracy{ 0.0 };
  double area{ 0.0 };
  double normalized_area{ 1.0 };
  double power{ 0.0 };
  double normalized_power{ 1.0 };
  std::size_t gates{ 0 };
  std::string netlist_path;
  std::vector<gate_id> pruned; // tied gates of the parent circuit

  /*! \brief Short identifier, e.g. cross_e4_t85_p3. */
  std::string label() const;
  bool operator==( design_point const& ) const = default;
};

/*! \brief Lexicographic (stage, e, tau_c, phi_c) order used for tie-breaking. */
bool config_less( design_point const& a, design_point const& b );

/*! \brief Vectors driving the exploration: `profile` decides pruning, `test`
 *  scores accuracy, and `power` (the test vectors when empty) drives power. */
struct eval_data
{
  stimulus profile;
  stimulus test;
  std::vector<double> test_labels;
  stimulus power;
};

struct point_metrics
{
  double accuracy{ 0.0 };
  double area{ 0.0 };
  double power{ 0.0 };
  std::size_t gates{ 0 };
};

/*! \brief Simulates the test vectors through the netlist and scores the first output bus. */
point_metrics evaluate( netlist const& n, quantized_model const& q, eval_data const& data, cell_library const& lib,
                        int threads = 1 );

/*! \brief tau_c = 0.80, 0.81, ..., 0.99. */
std::vector<double> default_tau_grid();

struct explore_options
{
  std::vector<double> tau_grid = default_tau_grid();
  int threads{ 0 }; // 0: OpenMP default
};

/*! \brief All (tau_c, phi_c in Phi_tau) prunes of one circuit; identical pruned-gate
 *  sets keep only their first occurrence. Points are not yet normalized. */
std::vector<design_point> explore_prune( netlist const& n, std::span<prune_candidate const> cands, quantized_model const& q,
                                         eval_data const& data, cell_library const& lib, explore_options const& opts,
                                         stage kind, int e );

struct exploration
{
  std::vector<design_point> points; // exact, coeff_only, prune_only..., cross...
  quantized_model exact_model;
  quantized_model approx_model;
  netlist exact;
  netlist approx;
  std::vector<prune_candidate> exact_candidates;
  std::vector<prune_candidate> approx_candidates;
};

/*! \brief Exact baseline, coefficient approximation at `e`, and pruning of both
 *  circuits; every point is normalized against the exact circuit. */
exploration explore_cross( quantized_model const& q, int e, eval_data const& data, area_cache& cache,
                           explore_options const& opts );

/*! \brief Regenerates the netlist a point was measured on. */
netlist materialize( design_point const& p, exploration const& x, cell_library const& lib );

/*! \brief a has accuracy >= and normalized area <= b, with one strict. */
bool dominates( design_point const& a, design_point const& b );

/*! \brief Non-dominated points, accuracy descending. Points equal on both axes
 *  collapse to the smallest configuration. */
std::vector<design_point> pareto( std::span<design_point const> points );

/*! \brief Smallest-area front member losing at most `budget` accuracy against
 *  `reference`; higher accuracy breaks area ties. */
std::optional<design_point> best_under_budget( std::span<design_point const> front, double reference, double budget );

/* Reports */

std::string report_csv( std::span<design_point const> points );
nlohmann::json to_json( design_point const& p );
design_point design_point_from_json( nlohmann::json const& j );
nlohmann::json report_json( std::span<design_point const> points, std::span<design_point const> front );
std::vector<design_point> points_from_report( nlohmann::json const& j );

/*! \brief Whitespace-separated (normalized_area, accuracy) pairs, one block per stage. */
std::string plot_data( std::span<design_point const> points );

/*! \brief Writes report.csv, front.csv, report.json and plot.dat into `dir`. */
void write_report( std::span<design_point const> points, std::span<design_point const> front,
                   std::filesystem::path const& dir );

} // namespace bespoke
