#pragma once

#include <stdexcept>
#include <string>

namespace patree {

// Invalid user-supplied configuration (bad sizes, missing floors, ...).
class ConfigError : public std::runtime_error {
  public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Internal invariant broken (inconsistent census update, bad replay, ...).
class ConsistencyError : public std::logic_error {
  public:
    explicit ConsistencyError(const std::string& what)
        : std::logic_error(what) {}
};

// A computation refused to run because it would exceed its resource budget.
class BudgetError : public std::runtime_error {
  public:
    explicit BudgetError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace patree
