#pragma once

#include <stdexcept>
#include <string>

namespace csplat {

/// Base class for all recoverable engine errors.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Geometry / camera
struct BehindCameraError : Error { using Error::Error; };
struct NonRigidPoseError : Error { using Error::Error; };

// Point clouds / fields
struct TooFewPointsError : Error { using Error::Error; };
struct EmptyInputError : Error { using Error::Error; };

// Binning / supervision
struct InsufficientFramesError : Error { using Error::Error; };
struct NoVisibilityError : Error { using Error::Error; };

// Dynamic graph
struct DuplicateObjectIdError : Error { using Error::Error; };
struct OutsideLifespanError : Error { using Error::Error; };
struct UnknownObjectError : Error { using Error::Error; };

// Losses / metrics
struct DimensionMismatchError : Error { using Error::Error; };
struct BadKappaError : Error { using Error::Error; };

// Editing
struct EmptyMaskError : Error { using Error::Error; };
struct InvalidDepthError : Error { using Error::Error; };
struct BadBoundsError : Error { using Error::Error; };
struct UnknownTrajectoryError : Error { using Error::Error; };
struct BadTrajectoryError : Error { using Error::Error; };
struct ServiceUnreachableError : Error { using Error::Error; };
struct MalformedResponseError : Error { using Error::Error; };
struct UnparseableDescriptionError : Error { using Error::Error; };

// Assets / IO
struct ParseError : Error { using Error::Error; };
struct VersionMismatchError : Error { using Error::Error; };
struct MissingReferenceError : Error { using Error::Error; };
struct DegenerateAssetError : Error { using Error::Error; };
struct UnknownAssetError : Error { using Error::Error; };
struct IOError : Error { using Error::Error; };

} // namespace csplat
