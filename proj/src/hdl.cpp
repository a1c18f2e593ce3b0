#include "bespoke/hdl.hpp"

#include <algorithm>
#include <charconv>
#include <map>
#include <regex>
#include <sstream>

#include <fmt/format.h>

#include "bespoke/error.hpp"
#include "bespoke/json_util.hpp"

namespace bespoke
{

namespace
{

constexpr char const* pin_names[] = { "A", "B", "C" };

std::string sanitize( std::string const& name )
{
  std::string out;
  for ( auto ch : name )
    out += std::isalnum( static_cast<unsigned char>( ch ) ) || ch == '_' ? ch : '_';
  if ( out.empty() || std::isdigit( static_cast<unsigned char>( out.front() ) ) )
    out = "m_" + out;
  return out;
}

} // namespace

std::string export_hdl( netlist const& n )
{
  std::map<net_id, std::string> input_name;
  for ( auto const& b : n.inputs )
  {
    for ( std::size_t i = 0; i < b.bits.size(); ++i )
      input_name[b.bits[i]] = fmt::format( "{}[{}]", b.name, i );
  }
  auto sig = [&]( net_id id ) -> std::string {
    if ( id == const0_net )
      return "1'b0";
    if ( id == const1_net )
      return "1'b1";
    if ( auto const it = input_name.find( id ); it != input_name.end() )
      return it->second;
    return fmt::format( "n{}", id );
  };

  std::string out = "// bespoke structural netlist, format version 1\n";
  out += fmt::format( "// @role {}\n", to_string( n.role ) );
  for ( auto const& b : n.tracked )
  {
    out += fmt::format( "// @tracked {} {}", b.name, b.is_signed ? "signed" : "unsigned" );
    for ( auto bit : b.bits )
      out += " " + sig( bit );
    out += "\n";
  }
  if ( !n.decision_gates.empty() )
  {
    out += "// @decision";
    for ( auto id : n.decision_gates )
      out += fmt::format( " {}", id );
    out += "\n";
  }

  std::vector<std::string> ports;
  for ( auto const* group : { &n.inputs, &n.outputs } )
  {
    for ( auto const& b : *group )
      ports.push_back( b.name );
  }
  out += fmt::format( "module {} ({});\n", sanitize( n.name.empty() ? "top" : n.name ), fmt::join( ports, ", " ) );
  for ( auto const& b : n.inputs )
    out += fmt::format( "  input {}[{}:0] {};\n", b.is_signed ? "signed " : "", b.width() - 1, b.name );
  for ( auto const& b : n.outputs )
    out += fmt::format( "  output {}[{}:0] {};\n", b.is_signed ? "signed " : "", b.width() - 1, b.name );
  for ( auto const& g : n.gates )
    out += fmt::format( "  wire n{};\n", g.output );
  for ( auto const& g : n.gates )
  {
    std::vector<std::string> pins;
    for ( std::size_t p = 0; p < g.inputs.size(); ++p )
      pins.push_back( fmt::format( ".{}({})", pin_names[p], sig( g.inputs[p] ) ) );
    pins.push_back( fmt::format( ".Y(n{})", g.output ) );
    out += fmt::format( "  {} g{} ({});\n", g.cell, g.id, fmt::join( pins, ", " ) );
  }
  for ( auto const& b : n.outputs )
  {
    for ( std::size_t i = 0; i < b.bits.size(); ++i )
      out += fmt::format( "  assign {}[{}] = {};\n", b.name, i, sig( b.bits[i] ) );
  }
  out += "endmodule\n";
  return out;
}

namespace
{

struct parser
{
  netlist n;
  std::map<std::string, std::vector<net_id>> input_bits;
  std::map<net_id, net_id> wire_net; // n<id> in text -> net in result
  std::size_t line_no{ 0 };

  [[noreturn]] void fail( std::string const& msg ) const
  {
    throw data_error( fmt::format( "HDL line {}: {}", line_no, msg ) );
  }

  net_id wire( std::uint64_t id )
  {
    auto const it = wire_net.find( static_cast<net_id>( id ) );
    if ( it != wire_net.end() )
      return it->second;
    auto const net = n.add_net();
    wire_net.emplace( static_cast<net_id>( id ), net );
    return net;
  }

  net_id signal( std::string const& s )
  {
    static std::regex const bit_re( R"(([A-Za-z_][A-Za-z0-9_]*)\[(\d+)\])" );
    if ( s == "1'b0" )
      return const0_net;
    if ( s == "1'b1" )
      return const1_net;
    if ( s.size() > 1 && s[0] == 'n' && std::all_of( s.begin() + 1, s.end(), ::isdigit ) )
      return wire( std::stoull( s.substr( 1 ) ) );
    std::smatch m;
    if ( std::regex_match( s, m, bit_re ) )
    {
      auto const it = input_bits.find( m[1] );
      if ( it == input_bits.end() )
        fail( fmt::format( "undeclared signal '{}'", m[1].str() ) );
      auto const idx = std::stoull( m[2] );
      if ( idx >= it->second.size() )
        fail( fmt::format( "bit {} out of range for '{}'", idx, m[1].str() ) );
      return it->second[idx];
    }
    fail( fmt::format( "unrecognized signal '{}'", s ) );
  }
};

std::vector<std::string> words( std::string const& s )
{
  std::istringstream in( s );
  std::vector<std::string> out;
  std::string w;
  while ( in >> w )
    out.push_back( w );
  return out;
}

} // namespace

netlist import_hdl( std::string const& text )
{
  static std::regex const module_re( R"(module\s+([A-Za-z_][A-Za-z0-9_]*)\s*\((.*)\)\s*;)" );
  static std::regex const port_re( R"((input|output)\s+(signed\s+)?\[(\d+):0\]\s+([A-Za-z_][A-Za-z0-9_]*)\s*;)" );
  static std::regex const wire_re( R"(wire\s+[^;]*;)" );
  static std::regex const inst_re( R"(([A-Za-z_][A-Za-z0-9_]*)\s+g(\d+)\s*\((.*)\)\s*;)" );
  static std::regex const pin_re( R"(\.([A-Z])\(\s*([^)\s]+)\s*\))" );
  static std::regex const assign_re( R"(assign\s+([A-Za-z_][A-Za-z0-9_]*)\[(\d+)\]\s*=\s*(\S+)\s*;)" );

  parser p;
  std::map<std::string, std::size_t> output_index;
  std::vector<std::string> tracked_lines;
  std::vector<std::pair<std::size_t, std::string>> deferred_tracked;
  std::string decision_line;
  std::size_t decision_line_no = 0;
  bool in_module = false, ended = false;

  std::istringstream in( text );
  std::string line;
  while ( std::getline( in, line ) )
  {
    ++p.line_no;
    auto const first = line.find_first_not_of( " \t\r" );
    if ( first == std::string::npos )
      continue;
    auto const body = line.substr( first, line.find_last_not_of( " \t\r" ) - first + 1 );
    std::smatch m;
    if ( body.rfind( "//", 0 ) == 0 )
    {
      auto const w = words( body.substr( 2 ) );
      if ( w.empty() )
        continue;
      if ( w[0] == "@role" && w.size() == 2 )
      {
        if ( w[1] == "classifier" )
          p.n.role = circuit_role::classifier;
        else if ( w[1] == "regressor" )
          p.n.role = circuit_role::regressor;
        else if ( w[1] == "generic" )
          p.n.role = circuit_role::generic;
        else
          p.fail( fmt::format( "unknown role '{}'", w[1] ) );
      }
      else if ( w[0] == "@tracked" )
        deferred_tracked.emplace_back( p.line_no, body.substr( 2 ) );
      else if ( w[0] == "@decision" )
      {
        decision_line = body.substr( 2 );
        decision_line_no = p.line_no;
      }
      continue;
    }
    if ( ended )
      p.fail( "text after endmodule" );
    if ( std::regex_match( body, m, module_re ) )
    {
      if ( in_module )
        p.fail( "nested module" );
      in_module = true;
      p.n.name = m[1];
      continue;
    }
    if ( !in_module )
      p.fail( "statement outside a module" );
    if ( body == "endmodule" )
    {
      ended = true;
      continue;
    }
    if ( std::regex_match( body, m, port_re ) )
    {
      auto const width = std::stoull( m[3] ) + 1;
      bus b{ m[4], {}, m[2].matched };
      if ( m[1] == "input" )
      {
        b.bits = p.n.add_nets( width );
        p.input_bits[b.name] = b.bits;
        p.n.inputs.push_back( std::move( b ) );
      }
      else
      {
        b.bits.assign( width, const0_net );
        output_index[b.name] = p.n.outputs.size();
        p.n.outputs.push_back( std::move( b ) );
      }
      continue;
    }
    if ( std::regex_match( body, wire_re ) )
      continue;
    if ( std::regex_match( body, m, assign_re ) )
    {
      auto const it = output_index.find( m[1] );
      if ( it == output_index.end() )
        p.fail( fmt::format( "assignment to undeclared output '{}'", m[1].str() ) );
      auto& b = p.n.outputs[it->second];
      auto const idx = std::stoull( m[2] );
      if ( idx >= b.bits.size() )
        p.fail( fmt::format( "bit {} out of range for '{}'", idx, b.name ) );
      b.bits[idx] = p.signal( m[3] );
      continue;
    }
    if ( std::regex_match( body, m, inst_re ) )
    {
      gate g;
      g.cell = m[1];
      g.id = static_cast<gate_id>( std::stoull( m[2] ) );
      std::map<char, net_id> pins;
      std::string const conns = m[3];
      bool has_y = false;
      for ( std::sregex_iterator it( conns.begin(), conns.end(), pin_re ), end; it != end; ++it )
      {
        auto const pin = ( *it )[1].str()[0];
        auto const net = p.signal( ( *it )[2] );
        if ( pin == 'Y' )
        {
          g.output = net;
          has_y = true;
        }
        else
          pins[pin] = net;
      }
      if ( !has_y )
        p.fail( fmt::format( "instance g{} has no output pin", g.id ) );
      for ( char pin = 'A'; pins.count( pin ); ++pin )
        g.inputs.push_back( pins[pin] );
      if ( g.inputs.size() != pins.size() )
        p.fail( fmt::format( "instance g{} has non-contiguous input pins", g.id ) );
      p.n.gates.push_back( std::move( g ) );
      continue;
    }
    p.fail( fmt::format( "unsupported statement '{}'", body ) );
  }
  if ( !ended )
    throw data_error( "HDL: missing endmodule" );

  for ( auto const& [lno, meta] : deferred_tracked )
  {
    p.line_no = lno;
    auto const w = words( meta );
    if ( w.size() < 3 || ( w[2] != "signed" && w[2] != "unsigned" ) )
      p.fail( "malformed @tracked annotation" );
    bus b{ w[1], {}, w[2] == "signed" };
    for ( std::size_t i = 3; i < w.size(); ++i )
      b.bits.push_back( p.signal( w[i] ) );
    p.n.tracked.push_back( std::move( b ) );
  }
  if ( decision_line_no )
  {
    p.line_no = decision_line_no;
    auto const w = words( decision_line );
    for ( std::size_t i = 1; i < w.size(); ++i )
    {
      gate_id id{};
      auto const [ptr, ec] = std::from_chars( w[i].data(), w[i].data() + w[i].size(), id );
      if ( ec != std::errc{} || ptr != w[i].data() + w[i].size() )
        p.fail( fmt::format( "bad gate id '{}' in @decision", w[i] ) );
      p.n.decision_gates.push_back( id );
    }
    std::sort( p.n.decision_gates.begin(), p.n.decision_gates.end() );
  }

  std::sort( p.n.gates.begin(), p.n.gates.end(), []( auto const& a, auto const& b ) { return a.id < b.id; } );
  if ( auto const d = validate( p.n ); !d.ok() )
    throw data_error( fmt::format( "HDL: invalid netlist: {}", d.messages.front() ) );
  return p.n;
}

void save_hdl( netlist const& n, std::filesystem::path const& path )
{
  write_text_file( path, export_hdl( n ) );
}

netlist load_hdl( std::filesystem::path const& path )
{
  return import_hdl( read_text_file( path ) );
}

} // namespace bespoke
