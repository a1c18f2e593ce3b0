#pragma once

#include <filesystem>
#include <string>

#include "bespoke/netlist.hpp"

namespace bespoke
{

/*! \brief Flat structural Verilog subset: one module, cell instances with
 *  named pins (.A .B .C .Y), wires n<id>, and `assign` for output bits.
 *
 * Metadata that Verilog cannot express rides in line comments:
 * `// @role`, `// @tracked NAME signed|unsigned bits...` and
 * `// @decision ids...`. Gate instances are named g<id>, so ids survive a
 * round trip; net ids of primary-input bits are reassigned on import.
 */
std::string export_hdl( netlist const& n );

/*! \brief Parses the subset written by export_hdl; errors carry line numbers. */
netlist import_hdl( std::string const& text );

void save_hdl( netlist const& n, std::filesystem::path const& path );
netlist load_hdl( std::filesystem::path const& path );

} // namespace bespoke
