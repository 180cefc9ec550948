#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "lab/persistence.hpp"

using namespace lab;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& name) {
    return fs::temp_directory_path() / (name + std::string(kArtifactExtension));
}

SignMatrix random_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
    auto eng = make_engine(seed);
    Eigen::MatrixXi m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = fair_bit(eng) ? 1 : -1;
    return SignMatrix(std::move(m));
}

}  // namespace

TEST_CASE("canonical dump sorts keys and fixes float formatting") {
    nlohmann::json j;
    j["zeta"] = 1;
    j["alpha"] = 0.1;
    const std::string bytes = canonical_dump(j);
    CHECK(bytes == "{\"alpha\":0.10000000000000001,\"zeta\":1}");
    CHECK(canonical_dump(j) == bytes);  // stable across calls
}

TEST_CASE("matrix round trip") {
    const auto m = make_parity_class(2);
    const auto path = temp_file("matrix_rt");
    const auto hash = save_artifact("sign_matrix", matrix_to_json(m), path);
    const auto loaded = load_artifact(path, "sign_matrix");
    CHECK(loaded.hash == hash);
    const auto back = matrix_from_json(loaded.payload);
    CHECK(back.entries() == m.entries());
    CHECK(back.row_labels() == m.row_labels());
    CHECK(back.col_labels() == m.col_labels());
}

TEST_CASE("distribution round trip keeps integer weights") {
    const DyadicDistribution d({3, 1, 4}, 3);
    const auto j = distribution_to_json(d);
    CHECK(j["weights"].is_array());
    CHECK(j["weights"][0].is_number_integer());
    CHECK(distribution_from_json(j) == d);
}

TEST_CASE("feature and model round trip") {
    Feature f;
    f.values.resize(4);
    f.values << 1, -1, -1, 1;
    f.derandomized = true;
    f.seed = {7, 8, 9};
    const auto f2 = feature_from_json(feature_to_json(f));
    CHECK(f2.values == f.values);
    CHECK(f2.derandomized);
    CHECK(f2.seed.g_bits == 7);
    CHECK(f2.seed.bern_bits == 9);

    LinearFeatureModel model;
    model.features = {f, f.negated()};
    model.alphas = {0.7, 0.25};
    const auto m2 = model_from_json(model_to_json(model));
    REQUIRE(m2.features.size() == 2);
    CHECK(m2.alphas == model.alphas);
    for (Eigen::Index x = 0; x < 4; ++x) CHECK(m2.predict(x) == model.predict(x));
}

TEST_CASE("save twice yields identical hashes and bytes") {
    const auto m = random_matrix(3, 3, 1);
    const auto p1 = temp_file("twice_a");
    const auto p2 = temp_file("twice_b");
    CHECK(save_artifact("sign_matrix", matrix_to_json(m), p1) ==
          save_artifact("sign_matrix", matrix_to_json(m), p2));
    std::ifstream a(p1), b(p2);
    std::string sa((std::istreambuf_iterator<char>(a)), {});
    std::string sb((std::istreambuf_iterator<char>(b)), {});
    CHECK(sa == sb);
}

TEST_CASE("tampering trips the hash check") {
    const auto path = temp_file("tamper");
    save_artifact("sign_matrix", matrix_to_json(random_matrix(2, 2, 9)), path);
    std::string text;
    {
        std::ifstream in(path);
        std::getline(in, text, '\0');
    }
    // Flip one matrix entry inside the payload.
    const auto pos = text.find("\"entries\":[");
    REQUIRE(pos != std::string::npos);
    text[pos + 11] == '-' ? text.erase(pos + 11, 1) : text.insert(pos + 11, "-");
    {
        std::ofstream out(path, std::ios::trunc);
        out << text;
    }
    CHECK_THROWS_AS(load_artifact(path), HashMismatchError);
}

TEST_CASE("error taxonomy is distinct") {
    const auto path = temp_file("errors");
    save_artifact("dyadic_distribution", distribution_to_json(DyadicDistribution({2, 2}, 2)),
                  path);
    CHECK_THROWS_AS(load_artifact(path, "sign_matrix"), SchemaMismatchError);

    {
        std::ofstream out(path, std::ios::trunc);
        out << "this is not json";
    }
    CHECK_THROWS_AS(load_artifact(path), MalformedArtifactError);

    {
        std::ofstream out(path, std::ios::trunc);
        out << "{\"kind\":\"x\"}";  // valid JSON, missing envelope fields
    }
    CHECK_THROWS_AS(load_artifact(path), MalformedArtifactError);
    CHECK_THROWS_AS(load_artifact(temp_file("does_not_exist")), MalformedArtifactError);
}

TEST_CASE("canonical serialization is injective over random artifacts") {
    std::set<std::string> bytes;
    std::size_t artifacts = 0;
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        bytes.insert(canonical_dump(matrix_to_json(random_matrix(3, 4, seed))));
        ++artifacts;
    }
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        auto eng = make_engine(seed + 1000);
        std::vector<double> p(5);
        for (auto& v : p) v = 1.0 + static_cast<double>(eng() % 97);
        bytes.insert(canonical_dump(distribution_to_json(DyadicDistribution::from_reals(p, 8))));
        ++artifacts;
    }
    // Distinct payloads map to distinct canonical bytes; byte collisions
    // can only come from identical payloads, which are rare here.
    CHECK(bytes.size() >= artifacts - 5);
}

TEST_CASE("malformed payloads are rejected with the malformed error") {
    CHECK_THROWS_AS(matrix_from_json({{"rows", 2}, {"cols", 2}, {"entries", {1, 1, 1}}}),
                    MalformedArtifactError);
    CHECK_THROWS_AS(distribution_from_json({{"scale_exponent", 2}, {"weights", {1, 1}}}),
                    MalformedArtifactError);
    CHECK_THROWS_AS(feature_from_json({{"values", {1, 0}}}), MalformedArtifactError);
}
