#pragma once

#include <stdexcept>
#include <string>

namespace vista {

// Root of every error thrown by the library. Callers that only care about
// "something in vista failed" catch this; specific failures derive from it.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace vista
