#pragma once

#include <stdexcept>
#include <string>

namespace deconv {

// Error classes map 1:1 onto CLI exit codes / C-API statuses:
// config 2, admissibility 3, numeric 1.
class config_error : public std::runtime_error {
public:
  config_error(std::string message, std::string context = {})
      : std::runtime_error(std::move(message)), context_(std::move(context)) {}
  const std::string& context() const { return context_; }

private:
  std::string context_;
};

class admissibility_error : public std::runtime_error {
public:
  admissibility_error(std::string message, std::string context = {})
      : std::runtime_error(std::move(message)), context_(std::move(context)) {}
  const std::string& context() const { return context_; }

private:
  std::string context_;
};

class numeric_error : public std::runtime_error {
public:
  numeric_error(std::string message, std::string context = {})
      : std::runtime_error(std::move(message)), context_(std::move(context)) {}
  const std::string& context() const { return context_; }

private:
  std::string context_;
};

} // namespace deconv
