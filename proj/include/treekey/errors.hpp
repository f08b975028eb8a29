#pragma once

#include <stdexcept>
#include <string>

namespace treekey {

// Base for everything this library throws on contract violations.
struct Error : std::runtime_error {
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Configuration file is malformed or fails schema validation (CLI exit code 2).
struct ConfigError : Error {
    using Error::Error;
};

// A requested run cannot be planned: infeasible lattice chain, degenerate key
// rate, or rates that do not fit the (p, n) grid (CLI exit code 3).
struct InfeasibleError : Error {
    using Error::Error;
};

struct NotATree : Error { using Error::Error; };
struct BadCorrelation : Error { using Error::Error; };
struct UnknownVertex : Error { using Error::Error; };
struct SingletonTree : Error { using Error::Error; };
struct MismatchedSubtree : Error { using Error::Error; };

struct DimensionMismatch : Error { using Error::Error; };
struct InfeasibleChain : InfeasibleError { using InfeasibleError::InfeasibleError; };
struct NotInFundamentalCell : Error { using Error::Error; };
struct BelowThreshold : Error { using Error::Error; };

struct FieldMismatch : Error { using Error::Error; };
struct RateTooLow : Error { using Error::Error; };

struct NonIntegralRate : InfeasibleError { using InfeasibleError::InfeasibleError; };
struct DegenerateKey : InfeasibleError { using InfeasibleError::InfeasibleError; };
struct TooFewTrials : Error { using Error::Error; };

}  // namespace treekey
