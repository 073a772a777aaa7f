#pragma once

#include <stdexcept>
#include <string>

namespace glimmlab {

// Module-level failure (bad numerics, non-convergence, consistency violation).
// The CLI maps these to exit code 1.
class ModuleError : public std::runtime_error {
public:
    ModuleError(std::string module, const std::string& what)
        : std::runtime_error(module + ": " + what), _module(std::move(module)) {}
    const std::string& module() const { return _module; }

private:
    std::string _module;
};

// Bad user input / configuration. The CLI maps these to exit code 2.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what)
        : std::runtime_error("config: " + what) {}
};

}  // namespace glimmlab
