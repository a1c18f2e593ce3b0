#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "bespoke/cell_library.hpp"
#include "bespoke/netlist.hpp"

namespace bespoke
{

/*! \brief Input vectors: one row per vector, one column per named input bus. */
struct stimulus
{
  std::vector<std::string> buses;
  std::vector<std::vector<std::int64_t>> rows;

  std::size_t size() const { return rows.size(); }
};

/*! \brief Binds each row of an integer feature matrix to buses x0, x1, ... */
stimulus feature_stimulus( std::vector<std::vector<std::int64_t>> const& features );

/*! \brief One row per vector, one column per output bus (netlist order), decoded by signedness. */
using word_rows = std::vector<std::vector<std::int64_t>>;

/*! \brief Per-net statistics over a stimulus. Counts are exact integers, so
 *  the profile is identical however the vectors are partitioned. */
struct activity_profile
{
  std::vector<std::uint64_t> ones;
  std::vector<std::uint64_t> toggles;
  std::uint64_t vector_count{ 0 };

  std::size_t num_nets() const { return ones.size(); }
  double p_one( net_id n ) const;
  double toggle_rate( net_id n ) const;
  bool operator==( activity_profile const& ) const = default;
};

struct sim_options
{
  int threads{ 0 }; // 0: OpenMP default
  bool profile{ false };
  bool tracked{ false };
};

struct sim_result
{
  word_rows outputs;
  word_rows tracked; // filled when sim_options::tracked
  activity_profile profile;
};

/*! \brief Levelized, 64-vectors-per-word simulator; vector blocks are evaluated in parallel. */
class simulator
{
public:
  simulator( netlist const& n, cell_library const& lib );

  sim_result run( stimulus const& s, sim_options const& opts = {} ) const;

  std::size_t num_gates() const { return ops_.size(); }

private:
  struct op
  {
    std::uint8_t kind;
    std::uint8_t arity;
    std::uint32_t tt;
    std::array<net_id, 3> in;
    net_id out;
  };

  netlist const* n_;
  std::vector<op> ops_;
};

word_rows simulate( netlist const& n, cell_library const& lib, stimulus const& s, int threads = 0 );

/*! \brief Serial per-vector evaluation through truth tables; the reference the parallel kernel is tested against. */
word_rows simulate_reference( netlist const& n, cell_library const& lib, stimulus const& s );

activity_profile profile( netlist const& n, cell_library const& lib, stimulus const& s, int threads = 0 );
activity_profile profile_reference( netlist const& n, cell_library const& lib, stimulus const& s );

nlohmann::json to_json( activity_profile const& a );

struct mismatch
{
  std::vector<std::int64_t> inputs;
  std::vector<std::int64_t> netlist_outputs;
  std::vector<std::int64_t> oracle_outputs;
};

struct equiv_report
{
  std::vector<mismatch> mismatches; // the first few, up to max_reported
  std::size_t mismatch_count{ 0 };
  std::size_t vectors_checked{ 0 };

  bool equivalent() const { return mismatch_count == 0; }
};

using oracle_fn = std::function<std::vector<std::int64_t>( std::span<std::int64_t const> )>;

/*! \brief Compares the netlist's output buses with an integer oracle on the given vectors.
 *  The oracle receives input values in netlist input-bus order. */
equiv_report check_equiv( netlist const& n, cell_library const& lib, oracle_fn const& oracle, stimulus const& s,
                          std::size_t max_reported = 16 );

/*! \brief Every assignment of the primary inputs; at most 20 input bits. */
stimulus exhaustive_stimulus( netlist const& n );

equiv_report check_equiv_exhaustive( netlist const& n, cell_library const& lib, oracle_fn const& oracle );

struct power_report
{
  double dynamic{ 0.0 };
  double static_power{ 0.0 };
  double total{ 0.0 };
};

/*! \brief dynamic = sum over nets of toggle_rate * driven pin capacitance; static = sum of leakage. */
power_report power( netlist const& n, activity_profile const& a, cell_library const& lib );

} // namespace bespoke
