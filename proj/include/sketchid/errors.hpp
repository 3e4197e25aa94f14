#pragma once

#include <stdexcept>
#include <string>

namespace sketchid {

// Failure categories, mapped 1:1 onto CLI exit codes.
enum class ErrorKind {
    usage = 1,    // bad flags, bad configuration values
    data = 2,     // I/O, schema, integrity, dimension mismatches
    numeric = 3,  // non-finite losses, diverged optimization
};

class Error : public std::runtime_error {
  public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const { return kind_; }

  private:
    ErrorKind kind_;
};

inline Error usage_error(const std::string& what) { return Error(ErrorKind::usage, what); }
inline Error data_error(const std::string& what) { return Error(ErrorKind::data, what); }
inline Error numeric_error(const std::string& what) { return Error(ErrorKind::numeric, what); }

}  // namespace sketchid
