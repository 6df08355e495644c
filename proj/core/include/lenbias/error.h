#ifndef LENBIAS_ERROR_H_
#define LENBIAS_ERROR_H_

#include <stdexcept>
#include <string>
#include <utility>

namespace lenbias {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Input data violates a documented format or invariant (manifests, feature
// files, configs). The CLI maps these to exit code 2.
class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& what) : Error(what) {}
};

// A computation could not be carried out with the given arguments.
class InvalidArgument : public Error {
 public:
  explicit InvalidArgument(const std::string& what) : Error(what) {}
};

// A pipeline stage failed. The CLI maps these to exit code 3.
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& what)
      : Error(stage + ": " + what), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

}  // namespace lenbias

#endif  // LENBIAS_ERROR_H_
