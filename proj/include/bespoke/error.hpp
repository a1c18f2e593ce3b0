#pragma once

#include <stdexcept>
#include <string>

namespace bespoke
{

/*! \brief Base class of all errors raised by the toolkit. */
class error : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/*! \brief Bad input data: unreadable files, malformed documents, schema violations. */
class data_error : public error
{
public:
  using error::error;
};

/*! \brief A generated or transformed circuit disagrees with its reference. */
class verification_error : public error
{
public:
  using error::error;
};

} // namespace bespoke
