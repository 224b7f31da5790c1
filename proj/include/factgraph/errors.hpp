#pragma once

#include <stdexcept>
#include <string>

namespace factgraph {

/// Base class for all engine errors.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace factgraph
