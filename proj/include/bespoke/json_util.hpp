#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include <fmt/format.h>
#include <json.hpp>

#include "bespoke/error.hpp"

namespace bespoke
{

/*! \brief Returns j[key] or throws a data_error naming the missing field. */
inline nlohmann::json const& require( nlohmann::json const& j, std::string const& key, std::string_view context )
{
  if ( !j.is_object() )
    throw data_error( fmt::format( "{}: expected an object", context ) );
  auto const it = j.find( key );
  if ( it == j.end() )
    throw data_error( fmt::format( "{}: missing field '{}'", context, key ) );
  return *it;
}

/*! \brief Runs `fn`, turning nlohmann type errors into data_errors tagged with `context`. */
template<typename Fn>
auto json_guard( std::string_view context, Fn&& fn ) -> decltype( fn() )
{
  try
  {
    return fn();
  }
  catch ( nlohmann::json::exception const& e )
  {
    throw data_error( fmt::format( "{}: {}", context, e.what() ) );
  }
}

/*! \brief Parses a JSON file; syntax errors report line and column. */
nlohmann::json read_json_file( std::filesystem::path const& path );

std::string read_text_file( std::filesystem::path const& path );

/*! \brief Writes via a temporary file and rename, so readers never see partial output. */
void write_text_file( std::filesystem::path const& path, std::string_view content );

} // namespace bespoke
