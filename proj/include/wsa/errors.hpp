#ifndef WSA_ERRORS_HPP
#define WSA_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace wsa {

// Invalid arguments, shape mismatches, violated preconditions. CLI exit code 1.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// File system and format failures. CLI exit code 2.
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace wsa

#endif  // WSA_ERRORS_HPP
