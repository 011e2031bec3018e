#pragma once

#include <stdexcept>
#include <string>

namespace mg {

// Base for recoverable errors raised by the library. The CLI maps these to
// exit code 2 (input/environment error).
struct Error : std::runtime_error {
    explicit Error(std::string msg) : std::runtime_error(std::move(msg)) {}
};

#define MG_ERROR_TYPE(NAME)                                              \
    struct NAME : Error {                                                \
        explicit NAME(std::string msg) : Error(std::move(msg)) {}        \
    }

// urdf / morphology
MG_ERROR_TYPE(MalformedXml);
MG_ERROR_TYPE(UnknownLinkReference);
MG_ERROR_TYPE(CycleDetected);
MG_ERROR_TYPE(UnsupportedJointKind);
MG_ERROR_TYPE(MissingJointAngle);
MG_ERROR_TYPE(TooManyLinks);

// mesh / point clouds
MG_ERROR_TYPE(UnsupportedFormat);
MG_ERROR_TYPE(CorruptFile);
MG_ERROR_TYPE(EmptyMesh);
MG_ERROR_TYPE(TooFewPoints);
MG_ERROR_TYPE(NoMeshes);

// tensor / layers
MG_ERROR_TYPE(ShapeMismatch);
MG_ERROR_TYPE(HeadDivisibility);
MG_ERROR_TYPE(IndexOutOfRange);
MG_ERROR_TYPE(GraphNotRecorded);

// model
MG_ERROR_TYPE(InvalidKeypointIndex);
MG_ERROR_TYPE(UnknownLink);
MG_ERROR_TYPE(MissingGroundTruth);
MG_ERROR_TYPE(VariantInputMismatch);

// pipeline
MG_ERROR_TYPE(CacheMiss);
MG_ERROR_TYPE(EmptyDataset);
MG_ERROR_TYPE(EmptyCloud);
MG_ERROR_TYPE(ConfigMismatch);
MG_ERROR_TYPE(DivergedNaN);
MG_ERROR_TYPE(TooFewGrasps);

#undef MG_ERROR_TYPE

}  // namespace mg
