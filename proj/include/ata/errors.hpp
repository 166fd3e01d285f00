#ifndef ATA_ERRORS_HPP
#define ATA_ERRORS_HPP

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace ata {

class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
public:
  using Error::Error;
};

// Raised by solve_allocation when M^N exceeds the exhaustive-search budget.
class SearchSpaceTooLarge : public Error {
public:
  using Error::Error;
};

class QpInfeasibleError : public Error {
public:
  QpInfeasibleError(std::size_t robot, std::size_t task, const std::string& what)
      : Error(what), robot_(robot), task_(task) {}

  std::size_t robot() const { return robot_; }
  std::size_t task() const { return task_; }

private:
  std::size_t robot_;
  std::size_t task_;
};

// Wraps an allocator failure with the simulation step at which it happened.
class StepError : public Error {
public:
  StepError(std::size_t step, const std::string& what) : Error(what), step_(step) {}
  std::size_t step() const { return step_; }

private:
  std::size_t step_;
};

class ParseError : public Error {
public:
  ParseError(std::string path, std::string message)
      : Error(path.empty() ? message : path + ": " + message),
        path_(std::move(path)),
        message_(std::move(message)) {}
  const std::string& path() const { return path_; }
  const std::string& message() const { return message_; }

private:
  std::string path_;
  std::string message_;
};

// Collects every violated invariant rather than stopping at the first.
class ValidationError : public Error {
public:
  explicit ValidationError(std::vector<std::string> issues)
      : Error(join(issues)), issues_(std::move(issues)) {}
  const std::vector<std::string>& issues() const { return issues_; }

private:
  static std::string join(const std::vector<std::string>& issues) {
    std::string out = "scenario validation failed:";
    for (const auto& s : issues) {
      out += "\n  - ";
      out += s;
    }
    return out;
  }
  std::vector<std::string> issues_;
};

class TraceFormatError : public Error {
public:
  using Error::Error;
};

}  // namespace ata

#endif  // ATA_ERRORS_HPP
