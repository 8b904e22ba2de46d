#pragma once

#include "atelier/graph.hpp"
#include "atelier/workspace.hpp"

#include <stdexcept>

namespace atelier {

// Infrastructure fault at submission time; everything after submission maps
// into a failed or timed-out ExecutionOutcome instead.
class BackendUnreachable : public std::runtime_error {
public:
    explicit BackendUnreachable(const std::string& message)
        : std::runtime_error(message) {}
};

class Backend {
public:
    virtual ~Backend() = default;

    // Precondition: graph passes concrete validation.
    virtual ExecutionOutcome execute(const WorkflowGraph& graph,
                                     double timeout_s) = 0;
};

}  // namespace atelier
