#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "bespoke/cell_library.hpp"
#include "bespoke/dse.hpp"
#include "bespoke/model.hpp"
#include "bespoke/netlist.hpp"
#include "bespoke/sim.hpp"

namespace bespoke
{

enum class stimulus_source
{
  train,
  test
};

/*! \brief Everything a run depends on. Relative paths in a config file resolve
 *  against the file's directory. */
struct run_config
{
  std::filesystem::path dataset;
  dataset_schema schema;
  std::filesystem::path model;
  fixed_point_spec spec;
  std::filesystem::path library; // empty: built-in default library
  int e{ 4 };
  std::vector<double> tau_grid = default_tau_grid();
  std::uint64_t seed{ 42 };
  double split_ratio{ 0.7 };
  std::filesystem::path output{ "out" };
  std::filesystem::path cache_dir; // empty: <output>/cache
  stimulus_source profile_stimulus{ stimulus_source::train };
  stimulus_source power_stimulus{ stimulus_source::test };
  int threads{ 0 };
  double accuracy_budget{ 0.01 };

  void validate() const;
};

/*! \brief Overlays the keys present in `j` onto `base`. */
run_config config_from_json( nlohmann::json const& j, std::filesystem::path const& base_dir, run_config base = {} );
run_config load_config( std::filesystem::path const& path );
nlohmann::json to_json( run_config const& c );

cell_library load_library( run_config const& c );

/*! \brief A real model file is quantized with the configured spec; a quantized one is used as is. */
quantized_model load_model( run_config const& c );

struct prepared_run
{
  cell_library lib;
  quantized_model model;
  split_result split;
  int_matrix train_x;
  int_matrix test_x;
};

prepared_run prepare( run_config const& c );

eval_data make_eval_data( prepared_run const& p, run_config const& c );

/*! \brief Netlist decisions against golden_infer on every given sample. */
equiv_report verify_circuit( netlist const& n, prepared_run const& p, int_matrix const& inputs, int threads = 0 );

/*! \brief Writes <output>/manifest.json: command, config, seed and library hash. */
void write_manifest( run_config const& c, cell_library const& lib, std::string const& command );

struct explore_outcome
{
  exploration x;
  std::vector<design_point> front;
  std::optional<design_point> best;
};

/*! \brief Full cross-layer exploration; writes reports and the netlists of the
 *  exact, coefficient-approximated and front points under <output>. */
explore_outcome run_explore( run_config const& c, prepared_run const& p );

/*! \brief (w, AREA(BM_w)) for every signed coefficient, one row per line. */
std::string area_table( cell_library const& lib, unsigned input_bits, unsigned coeff_bits,
                        std::filesystem::path const& cache_dir = {} );

} // namespace bespoke
