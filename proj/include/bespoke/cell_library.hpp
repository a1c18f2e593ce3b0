#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace bespoke
{

/*! \brief A combinational cell.
 *
 * Bit m of `truth_table` is the output for the input minterm m, where pin 0
 * is the least significant bit of m. Pins are named A, B, C in order; the
 * output pin is Y. MUX2 uses (A, B, S) with Y = S ? B : A.
 */
struct cell
{
  std::string name;
  unsigned arity{ 1 };
  std::uint32_t truth_table{ 0 };
  double area{ 0.0 };
  double input_cap{ 0.0 };
  double leakage{ 0.0 };

  bool operator==( cell const& ) const = default;
};

/*! \brief Named cells with area and power weights; the area model of every circuit. */
class cell_library
{
public:
  cell_library() = default;
  cell_library( std::string name, std::vector<cell> cells );

  /*! \brief INV 1.0, NAND2/NOR2 1.5, AND2/OR2 2.0, XOR2/XNOR2 3.0, MUX2 3.5. */
  static cell_library default_library();

  std::string const& name() const { return name_; }
  std::vector<cell> const& cells() const { return cells_; }

  cell const* find( std::string const& name ) const;
  cell const& at( std::string const& name ) const;
  std::optional<std::size_t> index_of( std::string const& name ) const;

  /*! \brief FNV-1a over the canonical serialization, as 16 hex digits. */
  std::string hash() const;

private:
  void check() const;

  std::string name_;
  std::vector<cell> cells_;
};

nlohmann::json to_json( cell_library const& lib );
cell_library cell_library_from_json( nlohmann::json const& j );
cell_library load_cell_library( std::filesystem::path const& path );

/*! \brief Evaluates a truth table of `arity` inputs on packed input bits. */
inline bool eval_truth_table( std::uint32_t tt, unsigned minterm )
{
  return ( tt >> minterm ) & 1u;
}

} // namespace bespoke
