#include "bespoke/cell_library.hpp"

#include <algorithm>
#include <set>

#include <fmt/format.h>

#include "bespoke/error.hpp"
#include "bespoke/json_util.hpp"

namespace bespoke
{

cell_library::cell_library( std::string name, std::vector<cell> cells )
    : name_( std::move( name ) ), cells_( std::move( cells ) )
{
  check();
}

void cell_library::check() const
{
  std::set<std::string> names;
  for ( auto const& c : cells_ )
  {
    if ( !names.insert( c.name ).second )
      throw data_error( fmt::format( "cell library '{}': duplicate cell '{}'", name_, c.name ) );
    if ( c.arity < 1 || c.arity > 3 )
      throw data_error( fmt::format( "cell library '{}': cell '{}' has arity {} outside 1..3", name_, c.name, c.arity ) );
    if ( c.truth_table >> ( 1u << c.arity ) )
      throw data_error( fmt::format( "cell library '{}': truth table of '{}' is longer than 2^{}", name_, c.name, c.arity ) );
    if ( !( c.area > 0.0 ) )
      throw data_error( fmt::format( "cell library '{}': cell '{}' needs a positive area", name_, c.name ) );
    if ( c.input_cap < 0.0 || c.leakage < 0.0 )
      throw data_error( fmt::format( "cell library '{}': cell '{}' has a negative power weight", name_, c.name ) );
  }
  for ( auto const* required : { "INV", "NAND2", "NOR2", "AND2", "OR2", "XOR2", "XNOR2", "MUX2" } )
  {
    if ( !names.count( required ) )
      throw data_error( fmt::format( "cell library '{}': required cell '{}' is missing", name_, required ) );
  }
}

cell_library cell_library::default_library()
{
  auto make = []( std::string name, unsigned arity, std::uint32_t tt, double area ) {
    return cell{ std::move( name ), arity, tt, area, 0.2 * area, 0.01 * area };
  };
  return cell_library( "default",
                       { make( "INV", 1, 0b01, 1.0 ),
                         make( "NAND2", 2, 0b0111, 1.5 ),
                         make( "NOR2", 2, 0b0001, 1.5 ),
                         make( "AND2", 2, 0b1000, 2.0 ),
                         make( "OR2", 2, 0b1110, 2.0 ),
                         make( "XOR2", 2, 0b0110, 3.0 ),
                         make( "XNOR2", 2, 0b1001, 3.0 ),
                         make( "MUX2", 3, 0b11001010, 3.5 ) } );
}

cell const* cell_library::find( std::string const& name ) const
{
  auto const it = std::find_if( cells_.begin(), cells_.end(), [&]( auto const& c ) { return c.name == name; } );
  return it == cells_.end() ? nullptr : &*it;
}

cell const& cell_library::at( std::string const& name ) const
{
  if ( auto const* c = find( name ) )
    return *c;
  throw data_error( fmt::format( "cell '{}' is not in library '{}'", name, name_ ) );
}

std::optional<std::size_t> cell_library::index_of( std::string const& name ) const
{
  auto const it = std::find_if( cells_.begin(), cells_.end(), [&]( auto const& c ) { return c.name == name; } );
  if ( it == cells_.end() )
    return std::nullopt;
  return static_cast<std::size_t>( it - cells_.begin() );
}

std::string cell_library::hash() const
{
  auto const text = to_json( *this ).dump();
  std::uint64_t h = 0xcbf29ce484222325ull;
  for ( unsigned char ch : text )
  {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  return fmt::format( "{:016x}", h );
}

nlohmann::json to_json( cell_library const& lib )
{
  nlohmann::json j;
  j["format"] = "bespoke-cell-library";
  j["version"] = 1;
  j["name"] = lib.name();
  j["cells"] = nlohmann::json::array();
  for ( auto const& c : lib.cells() )
  {
    j["cells"].push_back( { { "name", c.name },
                            { "arity", c.arity },
                            { "truth_table", c.truth_table },
                            { "area", c.area },
                            { "input_cap", c.input_cap },
                            { "leakage", c.leakage } } );
  }
  return j;
}

cell_library cell_library_from_json( nlohmann::json const& j )
{
  return json_guard( "cell library", [&] {
    std::vector<cell> cells;
    auto const& arr = require( j, "cells", "cell library" );
    for ( std::size_t i = 0; i < arr.size(); ++i )
    {
      auto const ctx = fmt::format( "cell library cells[{}]", i );
      cell c;
      c.name = require( arr[i], "name", ctx ).get<std::string>();
      c.arity = require( arr[i], "arity", ctx ).get<unsigned>();
      c.truth_table = require( arr[i], "truth_table", ctx ).get<std::uint32_t>();
      c.area = require( arr[i], "area", ctx ).get<double>();
      c.input_cap = arr[i].value( "input_cap", 0.0 );
      c.leakage = arr[i].value( "leakage", 0.0 );
      cells.push_back( std::move( c ) );
    }
    return cell_library( j.value( "name", std::string{ "custom" } ), std::move( cells ) );
  } );
}

cell_library load_cell_library( std::filesystem::path const& path )
{
  if ( !std::filesystem::exists( path ) )
    throw data_error( fmt::format( "cell library file '{}' does not exist", path.string() ) );
  return cell_library_from_json( read_json_file( path ) );
}

} // namespace bespoke
