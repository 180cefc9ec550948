#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "lab/boosting.hpp"
#include "lab/dyadic.hpp"
#include "lab/sign_matrix.hpp"

namespace lab {

struct SchemaMismatchError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct HashMismatchError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct MalformedArtifactError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Canonical byte form: keys sorted, floats printed with 17 significant
// digits, no insignificant whitespace.  Hashes and the injectivity
// property are stated over these bytes.
std::string canonical_dump(const nlohmann::json& j);

std::uint64_t fnv1a64(const std::string& bytes);
std::string content_hash(const nlohmann::json& payload);

inline constexpr int kSchemaVersion = 1;
inline constexpr const char* kArtifactExtension = ".lab.json";

struct ArtifactEnvelope {
    int schema_version = kSchemaVersion;
    std::string kind;
    std::string hash;  // content_hash(payload)
    nlohmann::json payload;
};

// Writes the envelope, returns the payload hash.
std::string save_artifact(const std::string& kind, const nlohmann::json& payload,
                          const std::filesystem::path& path);
// Verifies schema version, kind (when expected_kind is nonempty), and the
// stored hash against a recomputation.
ArtifactEnvelope load_artifact(const std::filesystem::path& path,
                               const std::string& expected_kind = "");

nlohmann::json matrix_to_json(const SignMatrix& m);
SignMatrix matrix_from_json(const nlohmann::json& j);

nlohmann::json distribution_to_json(const DyadicDistribution& d);
DyadicDistribution distribution_from_json(const nlohmann::json& j);

nlohmann::json feature_to_json(const Feature& f);
Feature feature_from_json(const nlohmann::json& j);

nlohmann::json model_to_json(const LinearFeatureModel& m);
LinearFeatureModel model_from_json(const nlohmann::json& j);

}  // namespace lab
