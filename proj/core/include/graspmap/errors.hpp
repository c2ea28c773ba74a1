#pragma once

#include <stdexcept>
#include <string>

namespace graspmap {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define GRASPMAP_DEFINE_ERROR(NAME)                    \
    class NAME : public Error {                        \
    public:                                            \
        using Error::Error;                            \
    }

// grasp-geometry
GRASPMAP_DEFINE_ERROR(OutOfBoundsError);
GRASPMAP_DEFINE_ERROR(DegenerateMapError);
GRASPMAP_DEFINE_ERROR(NotARectangleError);
GRASPMAP_DEFINE_ERROR(InvalidCoordinatesError);

// metrics
GRASPMAP_DEFINE_ERROR(EmptyGroundTruthError);
GRASPMAP_DEFINE_ERROR(LengthMismatchError);
GRASPMAP_DEFINE_ERROR(ZeroNormMapError);

// mhp-loss
GRASPMAP_DEFINE_ERROR(DimensionMismatchError);

// gmm-ranker
GRASPMAP_DEFINE_ERROR(EmptyMapError);
GRASPMAP_DEFINE_ERROR(SingularCovarianceError);
GRASPMAP_DEFINE_ERROR(AllDiscardedError);

// dataset-io
GRASPMAP_DEFINE_ERROR(MalformedLineError);
GRASPMAP_DEFINE_ERROR(TruncatedGroupError);
GRASPMAP_DEFINE_ERROR(ImageTooSmallError);
GRASPMAP_DEFINE_ERROR(MissingShapeLabelsError);

// regressor
GRASPMAP_DEFINE_ERROR(ShapeMismatchError);
GRASPMAP_DEFINE_ERROR(NonFiniteGradientError);
GRASPMAP_DEFINE_ERROR(EmptyFoldError);

// io / cli
GRASPMAP_DEFINE_ERROR(IoError);
GRASPMAP_DEFINE_ERROR(ConfigError);

#undef GRASPMAP_DEFINE_ERROR

} // namespace graspmap
