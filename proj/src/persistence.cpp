#include "lab/persistence.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace lab {

namespace {

void dump_walk(const nlohmann::json& j, std::string& out) {
    switch (j.type()) {
        case nlohmann::json::value_t::object: {
            // std::map keeps keys sorted; re-sort defensively anyway.
            std::map<std::string, const nlohmann::json*> sorted;
            for (auto it = j.begin(); it != j.end(); ++it) sorted[it.key()] = &it.value();
            out += '{';
            bool first = true;
            for (const auto& [key, value] : sorted) {
                if (!first) out += ',';
                first = false;
                out += nlohmann::json(key).dump();
                out += ':';
                dump_walk(*value, out);
            }
            out += '}';
            break;
        }
        case nlohmann::json::value_t::array: {
            out += '[';
            for (std::size_t i = 0; i < j.size(); ++i) {
                if (i > 0) out += ',';
                dump_walk(j[i], out);
            }
            out += ']';
            break;
        }
        case nlohmann::json::value_t::number_float: {
            char buf[64];
            std::snprintf(buf, sizeof(buf), "%.17g", j.get<double>());
            out += buf;
            break;
        }
        default:
            out += j.dump();
    }
}

}  // namespace

std::string canonical_dump(const nlohmann::json& j) {
    std::string out;
    dump_walk(j, out);
    return out;
}

std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string content_hash(const nlohmann::json& payload) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(canonical_dump(payload))));
    return buf;
}

std::string save_artifact(const std::string& kind, const nlohmann::json& payload,
                          const std::filesystem::path& path) {
    nlohmann::json envelope;
    envelope["schema_version"] = kSchemaVersion;
    envelope["kind"] = kind;
    envelope["content_hash"] = content_hash(payload);
    envelope["payload"] = payload;
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw MalformedArtifactError("cannot open for writing: " + path.string());
    out << canonical_dump(envelope) << '\n';
    return envelope["content_hash"].get<std::string>();
}

ArtifactEnvelope load_artifact(const std::filesystem::path& path,
                               const std::string& expected_kind) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MalformedArtifactError("cannot open for reading: " + path.string());
    nlohmann::json envelope;
    try {
        in >> envelope;
    } catch (const nlohmann::json::parse_error& e) {
        throw MalformedArtifactError("not valid JSON: " + std::string(e.what()));
    }
    if (!envelope.is_object() || !envelope.contains("schema_version") ||
        !envelope.contains("kind") || !envelope.contains("content_hash") ||
        !envelope.contains("payload"))
        throw MalformedArtifactError("missing envelope fields: " + path.string());
    if (envelope["schema_version"].get<int>() != kSchemaVersion)
        throw SchemaMismatchError("unsupported schema version in " + path.string());
    ArtifactEnvelope a;
    a.schema_version = envelope["schema_version"].get<int>();
    a.kind = envelope["kind"].get<std::string>();
    a.hash = envelope["content_hash"].get<std::string>();
    a.payload = envelope["payload"];
    if (!expected_kind.empty() && a.kind != expected_kind)
        throw SchemaMismatchError("expected kind '" + expected_kind + "', found '" + a.kind + "'");
    if (content_hash(a.payload) != a.hash)
        throw HashMismatchError("content hash does not match payload in " + path.string());
    return a;
}

nlohmann::json matrix_to_json(const SignMatrix& m) {
    nlohmann::json j;
    j["rows"] = m.rows();
    j["cols"] = m.cols();
    j["row_labels"] = m.row_labels();
    j["col_labels"] = m.col_labels();
    std::vector<int> entries;
    entries.reserve(static_cast<std::size_t>(m.rows() * m.cols()));
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index x = 0; x < m.cols(); ++x) entries.push_back(m(i, x));
    j["entries"] = entries;
    return j;
}

SignMatrix matrix_from_json(const nlohmann::json& j) {
    try {
        const auto rows = j.at("rows").get<Eigen::Index>();
        const auto cols = j.at("cols").get<Eigen::Index>();
        const auto entries = j.at("entries").get<std::vector<int>>();
        if (rows < 1 || cols < 1 ||
            entries.size() != static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols))
            throw MalformedArtifactError("matrix: entry count does not match rows*cols");
        Eigen::MatrixXi m(rows, cols);
        for (Eigen::Index i = 0; i < rows; ++i)
            for (Eigen::Index x = 0; x < cols; ++x)
                m(i, x) = entries[static_cast<std::size_t>(i * cols + x)];
        return SignMatrix(std::move(m), j.value("row_labels", std::vector<std::string>{}),
                          j.value("col_labels", std::vector<std::string>{}));
    } catch (const nlohmann::json::exception& e) {
        throw MalformedArtifactError("matrix: " + std::string(e.what()));
    }
}

nlohmann::json distribution_to_json(const DyadicDistribution& d) {
    // Integer weights over 2^k, never floats.
    return {{"scale_exponent", d.scale_exponent()}, {"weights", d.weights()}};
}

DyadicDistribution distribution_from_json(const nlohmann::json& j) {
    try {
        return DyadicDistribution(j.at("weights").get<std::vector<std::uint64_t>>(),
                                  j.at("scale_exponent").get<int>());
    } catch (const nlohmann::json::exception& e) {
        throw MalformedArtifactError("distribution: " + std::string(e.what()));
    } catch (const std::invalid_argument& e) {
        throw MalformedArtifactError("distribution: " + std::string(e.what()));
    }
}

nlohmann::json feature_to_json(const Feature& f) {
    nlohmann::json j;
    std::vector<int> values(f.values.data(), f.values.data() + f.values.size());
    j["values"] = values;
    j["derandomized"] = f.derandomized;
    j["seed"] = {{"g_bits", f.seed.g_bits}, {"x_bits", f.seed.x_bits},
                 {"bern_bits", f.seed.bern_bits}};
    return j;
}

Feature feature_from_json(const nlohmann::json& j) {
    try {
        Feature f;
        const auto values = j.at("values").get<std::vector<int>>();
        if (values.empty()) throw MalformedArtifactError("feature: empty value table");
        f.values.resize(static_cast<Eigen::Index>(values.size()));
        for (std::size_t i = 0; i < values.size(); ++i) {
            if (values[i] != 1 && values[i] != -1)
                throw MalformedArtifactError("feature: value not in {-1,+1}");
            f.values(static_cast<Eigen::Index>(i)) = values[i];
        }
        f.derandomized = j.value("derandomized", false);
        if (j.contains("seed")) {
            f.seed.g_bits = j["seed"].value("g_bits", std::uint64_t{0});
            f.seed.x_bits = j["seed"].value("x_bits", std::uint64_t{0});
            f.seed.bern_bits = j["seed"].value("bern_bits", std::uint64_t{0});
        }
        return f;
    } catch (const nlohmann::json::exception& e) {
        throw MalformedArtifactError("feature: " + std::string(e.what()));
    }
}

nlohmann::json model_to_json(const LinearFeatureModel& m) {
    nlohmann::json j;
    j["features"] = nlohmann::json::array();
    for (const auto& f : m.features) j["features"].push_back(feature_to_json(f));
    j["alphas"] = m.alphas;
    j["l1_norm"] = m.l1_norm();
    return j;
}

LinearFeatureModel model_from_json(const nlohmann::json& j) {
    try {
        LinearFeatureModel m;
        for (const auto& f : j.at("features")) m.features.push_back(feature_from_json(f));
        m.alphas = j.at("alphas").get<std::vector<double>>();
        if (m.alphas.size() != m.features.size())
            throw MalformedArtifactError("model: alpha count does not match feature count");
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw MalformedArtifactError("model: " + std::string(e.what()));
    }
}

}  // namespace lab
