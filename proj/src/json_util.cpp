#include "bespoke/json_util.hpp"

#include <atomic>
#include <fstream>
#include <sstream>

#include <unistd.h>

namespace bespoke
{

std::string read_text_file( std::filesystem::path const& path )
{
  std::ifstream in( path, std::ios::binary );
  if ( !in )
    throw data_error( fmt::format( "cannot open '{}'", path.string() ) );
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

nlohmann::json read_json_file( std::filesystem::path const& path )
{
  auto const text = read_text_file( path );
  try
  {
    return nlohmann::json::parse( text );
  }
  catch ( nlohmann::json::parse_error const& e )
  {
    std::size_t line = 1, col = 1;
    for ( std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i )
    {
      if ( text[i] == '\n' )
      {
        ++line;
        col = 1;
      }
      else
        ++col;
    }
    throw data_error( fmt::format( "{}:{}:{}: malformed JSON: {}", path.string(), line, col, e.what() ) );
  }
}

void write_text_file( std::filesystem::path const& path, std::string_view content )
{
  static std::atomic<unsigned> counter{ 0 };
  std::error_code ec;
  if ( path.has_parent_path() )
    std::filesystem::create_directories( path.parent_path(), ec );
  if ( ec )
    throw data_error( fmt::format( "cannot create directory '{}': {}", path.parent_path().string(), ec.message() ) );
  auto tmp = path;
  tmp += fmt::format( ".tmp{}.{}", ::getpid(), counter++ );
  {
    std::ofstream out( tmp, std::ios::binary | std::ios::trunc );
    if ( !out )
      throw data_error( fmt::format( "cannot write '{}'", path.string() ) );
    out.write( content.data(), static_cast<std::streamsize>( content.size() ) );
    if ( !out )
      throw data_error( fmt::format( "failed writing '{}'", path.string() ) );
  }
  std::filesystem::rename( tmp, path, ec );
  if ( ec )
    throw data_error( fmt::format( "cannot write '{}': {}", path.string(), ec.message() ) );
}

} // namespace bespoke
