#pragma once

#include <stdexcept>
#include <string>

namespace arac {

struct MalformedMap : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NodeOutOfRange : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct UnknownAgent : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct PlacementImpossible : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct IllegalAction : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct SteppingTerminalState : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ShapeMismatch : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct FullyMaskedRow : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct OutputNotScalar : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct EmptyCandidates : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct EmptyBatch : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct SupportMismatch : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NoLegalAction : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NonConvergence : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct IncompatibleCheckpoint : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct InvalidValue : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace arac
