#pragma once

#include <stdexcept>
#include <string>

namespace dentseg {

struct ShapeMismatch : std::runtime_error {
    explicit ShapeMismatch(const std::string& what) : std::runtime_error("ShapeMismatch: " + what) {}
};

struct OddSpatialDim : std::runtime_error {
    explicit OddSpatialDim(const std::string& what) : std::runtime_error("OddSpatialDim: " + what) {}
};

struct BadRate : std::runtime_error {
    explicit BadRate(const std::string& what) : std::runtime_error("BadRate: " + what) {}
};

struct BadRatios : std::runtime_error {
    explicit BadRatios(const std::string& what) : std::runtime_error("BadRatios: " + what) {}
};

struct EmptyDataset : std::runtime_error {
    explicit EmptyDataset(const std::string& what) : std::runtime_error("EmptyDataset: " + what) {}
};

struct MissingMask : std::runtime_error {
    explicit MissingMask(const std::string& sample_id)
        : std::runtime_error("MissingMask: no mask found for image stem '" + sample_id + "'") {}
};

struct DuplicateId : std::runtime_error {
    explicit DuplicateId(const std::string& sample_id)
        : std::runtime_error("DuplicateId: two images share the stem '" + sample_id + "'") {}
};

struct DecodeError : std::runtime_error {
    explicit DecodeError(const std::string& what) : std::runtime_error("DecodeError: " + what) {}
};

struct UnsupportedDepth : std::runtime_error {
    explicit UnsupportedDepth(const std::string& what) : std::runtime_error("UnsupportedDepth: " + what) {}
};

struct CorruptArchive : std::runtime_error {
    explicit CorruptArchive(const std::string& what) : std::runtime_error("CorruptArchive: " + what) {}
};

struct TruncatedPayload : std::runtime_error {
    explicit TruncatedPayload(const std::string& what) : std::runtime_error("TruncatedPayload: " + what) {}
};

struct MissingWeight : std::runtime_error {
    explicit MissingWeight(const std::string& name)
        : std::runtime_error("MissingWeight: archive has no tensor named '" + name + "'") {}
};

struct WeightShapeMismatch : std::runtime_error {
    explicit WeightShapeMismatch(const std::string& what) : std::runtime_error("WeightShapeMismatch: " + what) {}
};

struct ConfigMismatch : std::runtime_error {
    explicit ConfigMismatch(const std::string& what) : std::runtime_error("ConfigMismatch: " + what) {}
};

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error("ConfigError: " + what) {}
};

struct NonFiniteLoss : std::runtime_error {
    explicit NonFiniteLoss(const std::string& what) : std::runtime_error("NonFiniteLoss: " + what) {}
};

struct EmptyCounts : std::runtime_error {
    explicit EmptyCounts(const std::string& what) : std::runtime_error("EmptyCounts: " + what) {}
};

struct EmptyRow : std::runtime_error {
    explicit EmptyRow(const std::string& what) : std::runtime_error("EmptyRow: " + what) {}
};

struct SchemaError : std::runtime_error {
    explicit SchemaError(const std::string& what) : std::runtime_error("SchemaError: " + what) {}
};

} // namespace dentseg
