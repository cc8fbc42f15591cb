#pragma once

#include <stdexcept>
#include <string>

namespace clutter {

// Base class for every error the library raises on purpose.
struct Error : std::runtime_error {
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// geometry
struct TerminalInsideObstacle : Error {
    explicit TerminalInsideObstacle(const std::string& what) : Error(what) {}
};
struct NoPath : Error {
    explicit NoPath(const std::string& what) : Error(what) {}
};

// scene
struct GenerationBudgetExceeded : Error {
    explicit GenerationBudgetExceeded(const std::string& what) : Error(what) {}
};
struct ParseError : Error {
    explicit ParseError(const std::string& what) : Error(what) {}
};
struct SchemaMismatch : Error {
    explicit SchemaMismatch(const std::string& what) : Error(what) {}
};

// motion
struct Unreachable : Error {
    explicit Unreachable(const std::string& what) : Error(what) {}
};
struct SimulationStall : Error {
    explicit SimulationStall(const std::string& what) : Error(what) {}
};

// planners
struct NoFeasibleAssignment : Error {
    explicit NoFeasibleAssignment(const std::string& what) : Error(what) {}
};
struct CapExceeded : Error {
    explicit CapExceeded(const std::string& what) : Error(what) {}
};
struct BudgetExhausted : Error {
    explicit BudgetExhausted(const std::string& what) : Error(what) {}
};

}  // namespace clutter
