#pragma once

#include <stdexcept>
#include <string>

namespace aog {

// Every failure raised by the library derives from Error so callers can
// catch one type; the CLI maps the concrete kinds onto exit codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ParameterError : public Error { public: using Error::Error; };
class LookupError : public Error { public: using Error::Error; };
class CapacityError : public Error { public: using Error::Error; };
class MismatchError : public Error { public: using Error::Error; };
class ParseError : public Error { public: using Error::Error; };
class VersionError : public Error { public: using Error::Error; };
class ShapeError : public Error { public: using Error::Error; };
class BoundsError : public Error { public: using Error::Error; };
class InputError : public Error { public: using Error::Error; };
class StateError : public Error { public: using Error::Error; };
class SpecError : public Error { public: using Error::Error; };
class NumericError : public Error { public: using Error::Error; };

} // namespace aog
