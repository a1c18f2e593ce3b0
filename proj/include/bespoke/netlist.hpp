#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "bespoke/cell_library.hpp"

namespace bespoke
{

using net_id = std::uint32_t;
using gate_id = std::uint32_t;

inline constexpr net_id const0_net = 0;
inline constexpr net_id const1_net = 1;

inline net_id const_net( bool value )
{
  return value ? const1_net : const0_net;
}

inline bool is_const_net( net_id n )
{
  return n <= const1_net;
}

struct gate
{
  gate_id id{ 0 };
  std::string cell;
  std::vector<net_id> inputs; // ordered by pin
  net_id output{ 0 };

  bool operator==( gate const& ) const = default;
};

/*! \brief A named bit-vector, least significant bit first. */
struct bus
{
  std::string name;
  std::vector<net_id> bits;
  bool is_signed{ false };

  std::size_t width() const { return bits.size(); }
  bool operator==( bus const& ) const = default;
};

enum class circuit_role
{
  generic,
  regressor,
  classifier
};

std::string to_string( circuit_role r );

/*! \brief Combinational gate-level DAG.
 *
 * Nets 0 and 1 are the constants. Every other net is driven by exactly one
 * primary-input bit or gate output. Gates are kept sorted by id; ids survive
 * every transformation so metadata stays attached. For classifiers,
 * `tracked` holds the argmax-input words O_1..O_k and `decision_gates` the
 * argmax/vote gates that must never be pruned.
 */
struct netlist
{
  std::string name;
  circuit_role role{ circuit_role::generic };
  std::uint32_t num_nets{ 2 };
  std::vector<gate> gates;
  std::vector<bus> inputs;
  std::vector<bus> outputs;
  std::vector<bus> tracked;
  std::vector<gate_id> decision_gates; // sorted
  nlohmann::json meta = nlohmann::json::object();

  net_id add_net() { return num_nets++; }
  std::vector<net_id> add_nets( std::size_t n );
  gate_id add_gate( std::string cell, std::vector<net_id> inputs, net_id output );

  gate const* find_gate( gate_id id ) const;
  bus const* find_input( std::string const& name ) const;
  bus const* find_output( std::string const& name ) const;
  std::size_t input_bit_count() const;
  bool is_decision_gate( gate_id id ) const;

  bool operator==( netlist const& ) const = default;
};

struct diagnostics
{
  std::vector<std::string> messages; // at most ten

  bool ok() const { return messages.empty(); }
};

/*! \brief Checks every structural invariant; `lib` additionally checks cells and arities. */
diagnostics validate( netlist const& n, cell_library const* lib = nullptr );

/*! \brief Positions into `n.gates` in topological order, ties broken by gate id.
 *  Throws on a combinational cycle. */
std::vector<std::size_t> topological_positions( netlist const& n );

/*! \brief Gate ids in topological order. */
std::vector<gate_id> levelize( netlist const& n );

/*! \brief Removes the gate and redirects its output net to a constant. */
netlist tie_to_const( netlist const& n, gate_id g, bool value );

/*! \brief Batch form of tie_to_const. */
netlist tie_to_const( netlist const& n, std::span<std::pair<gate_id, bool> const> ties );

struct area_report
{
  double total_area{ 0.0 };
  std::map<std::string, std::size_t> cell_counts;
  std::size_t gate_count{ 0 };
};

area_report area( netlist const& n, cell_library const& lib );

/* Serialization: JSON netlist format, version 1. */
nlohmann::json to_json( netlist const& n );
netlist netlist_from_json( nlohmann::json const& j );
void save_netlist( netlist const& n, std::filesystem::path const& path );
netlist load_netlist( std::filesystem::path const& path );

} // namespace bespoke
