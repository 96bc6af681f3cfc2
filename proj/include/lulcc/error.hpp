#pragma once

#include <stdexcept>
#include <string>

namespace lulcc {

// Every module reports contract violations through this type. `module()` names
// the subsystem that raised it so the CLI can surface it in its error line.
class Error : public std::runtime_error {
 public:
  Error(std::string module, const std::string& detail)
      : std::runtime_error(module + ": " + detail),
        module_(std::move(module)),
        detail_(detail) {}

  const std::string& module() const noexcept { return module_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  std::string module_;
  std::string detail_;
};

}  // namespace lulcc
