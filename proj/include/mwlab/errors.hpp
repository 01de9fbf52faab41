#pragma once

#include <stdexcept>
#include <string>

namespace mwlab {

struct DomainError : std::runtime_error {
    explicit DomainError(const std::string& what) : std::runtime_error(what) {}
};

struct InvalidInputError : std::runtime_error {
    explicit InvalidInputError(const std::string& what) : std::runtime_error(what) {}
};

struct IllConditionedError : std::runtime_error {
    explicit IllConditionedError(const std::string& what) : std::runtime_error(what) {}
};

struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

struct KernelError : std::runtime_error {
    explicit KernelError(const std::string& what) : std::runtime_error(what) {}
};

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace mwlab
