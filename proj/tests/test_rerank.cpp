#include <doctest.h>

#include <filesystem>

#include "dualfill/preprocess.hpp"
#include "dualfill/rerank.hpp"

using namespace dualfill;

namespace {

std::vector<LexedToken> context_of(const std::string& source) {
    return preprocess_tokens(source);
}

Prediction pred(const std::string& token, TypeTag type, double p) {
    return {token, type, p};
}

}  // namespace

TEST_CASE("scope index classifies declarations by kind and scope") {
    SUBCASE("variable assigned in the enclosing function") {
        auto index = build_scope_index(context_of("def f():\n    total = 1\n    x = "));
        const auto* e = index.find("total");
        REQUIRE(e != nullptr);
        CHECK(e->kind == NameKind::VARIABLE_NAME);
        CHECK(e->scope == ScopeLevel::FUNCTION);
    }
    SUBCASE("method defined on the enclosing class") {
        auto index = build_scope_index(
            context_of("class C:\n    def helper(self):\n        return 1\n    def g(self):\n        y = "));
        const auto* e = index.find("helper");
        REQUIRE(e != nullptr);
        CHECK(e->kind == NameKind::FUNCTION_NAME);
        CHECK(e->scope == ScopeLevel::CLASS);
    }
    SUBCASE("module-level constant has file scope") {
        auto index = build_scope_index(context_of("LIMIT = 10\nx = "));
        const auto* e = index.find("LIMIT");
        REQUIRE(e != nullptr);
        CHECK(e->kind == NameKind::VARIABLE_NAME);
        CHECK(e->scope == ScopeLevel::FILE);
    }
    SUBCASE("module-level def has file scope") {
        auto index = build_scope_index(context_of("def util():\n    return 1\nz = "));
        const auto* e = index.find("util");
        REQUIRE(e != nullptr);
        CHECK(e->kind == NameKind::FUNCTION_NAME);
        CHECK(e->scope == ScopeLevel::FILE);
    }
    SUBCASE("attribute access is recorded") {
        auto index = build_scope_index(context_of("import os\np = os.path\nq = "));
        const auto* e = index.find("path");
        REQUIRE(e != nullptr);
        CHECK(e->kind == NameKind::ATTRIBUTE_ACCESS);
    }
    SUBCASE("names in closed sibling functions are not visible") {
        auto index = build_scope_index(
            context_of("def a():\n    hidden = 1\n    return hidden\ndef b():\n    x = "));
        CHECK(index.find("hidden") == nullptr);
    }
    SUBCASE("innermost scope wins for shadowed names") {
        auto index = build_scope_index(context_of("n = 1\ndef f():\n    n = 2\n    y = "));
        const auto* e = index.find("n");
        REQUIRE(e != nullptr);
        CHECK(e->scope == ScopeLevel::FUNCTION);
    }
}

TEST_CASE("rerank multiplies by the printed weights") {
    WeightTable table = WeightTable::defaults();

    SUBCASE("variable declared in the closest function: 0.10 -> 0.1625") {
        ScopeIndex index;
        index.entries.push_back({"count", NameKind::VARIABLE_NAME, ScopeLevel::FUNCTION});
        auto out = rerank({pred("count", TypeTag::LOCAL_VARIABLE, 0.10)}, index, table);
        REQUIRE(out.size() == 1);
        CHECK(out[0].probability == doctest::Approx(0.1625).epsilon(1e-12));
    }
    SUBCASE("function name declared in the same class: 0.20 -> 0.325") {
        ScopeIndex index;
        index.entries.push_back({"helper", NameKind::FUNCTION_NAME, ScopeLevel::CLASS});
        auto out = rerank({pred("helper", TypeTag::FUNCTION_NAME, 0.20)}, index, table);
        CHECK(out[0].probability == doctest::Approx(0.325).epsilon(1e-12));
    }
    SUBCASE("empty index keeps the input order") {
        auto preds = std::vector<Prediction>{pred("a", TypeTag::LOCAL_VARIABLE, 0.3),
                                             pred("b", TypeTag::FUNCTION_NAME, 0.2),
                                             pred("c", TypeTag::ATTRIBUTE, 0.1)};
        auto out = rerank(preds, ScopeIndex{}, table);
        REQUIRE(out.size() == 3);
        CHECK(out[0].token == "a");
        CHECK(out[1].token == "b");
        CHECK(out[2].token == "c");
        CHECK(out[0].probability == doctest::Approx(0.3));
    }
}

TEST_CASE("all nine kind-by-scope cells apply the exact multiplier") {
    const WeightTable table = WeightTable::defaults();
    const double expected[3][3] = {
        {1.625, 1.250, 1.125},  // attribute access
        {1.625, 1.125, 1.500},  // variable names
        {1.125, 1.625, 1.500},  // function names
    };
    const TypeTag tag_for[3] = {TypeTag::ATTRIBUTE, TypeTag::LOCAL_VARIABLE,
                                TypeTag::FUNCTION_NAME};
    const NameKind kinds[3] = {NameKind::ATTRIBUTE_ACCESS, NameKind::VARIABLE_NAME,
                               NameKind::FUNCTION_NAME};
    const ScopeLevel scopes[3] = {ScopeLevel::FUNCTION, ScopeLevel::CLASS,
                                  ScopeLevel::FILE};
    for (int k = 0; k < 3; ++k)
        for (int s = 0; s < 3; ++s) {
            ScopeIndex index;
            index.entries.push_back({"name", kinds[k], scopes[s]});
            auto out = rerank({pred("name", tag_for[k], 0.08)}, index, table);
            CAPTURE(k);
            CAPTURE(s);
            CHECK(out[0].probability ==
                  doctest::Approx(0.08 * expected[k][s]).epsilon(1e-12));
        }
}

TEST_CASE("re-ranked probability never decreases") {
    WeightTable table = WeightTable::defaults();
    ScopeIndex index;
    index.entries.push_back({"x", NameKind::VARIABLE_NAME, ScopeLevel::FILE});
    index.entries.push_back({"f", NameKind::FUNCTION_NAME, ScopeLevel::CLASS});
    auto preds = std::vector<Prediction>{pred("x", TypeTag::LOCAL_VARIABLE, 0.4),
                                         pred("f", TypeTag::FUNCTION_NAME, 0.3),
                                         pred("kw", TypeTag::RETURN, 0.2)};
    auto out = rerank(preds, index, table);
    for (const auto& p : out) {
        double original = 0.0;
        for (const auto& q : preds)
            if (q.token == p.token) original = q.probability;
        CHECK(p.probability >= original);
    }
}

TEST_CASE("identity weights are a no-op on ordering and scores") {
    ScopeIndex index;
    index.entries.push_back({"a", NameKind::VARIABLE_NAME, ScopeLevel::FUNCTION});
    index.entries.push_back({"b", NameKind::FUNCTION_NAME, ScopeLevel::FILE});
    auto preds = std::vector<Prediction>{pred("a", TypeTag::LOCAL_VARIABLE, 0.5),
                                         pred("b", TypeTag::FUNCTION_NAME, 0.308),
                                         pred("c", TypeTag::LOCAL_VARIABLE, 0.192)};
    auto out = rerank(preds, index, WeightTable::identity());
    REQUIRE(out.size() == preds.size());
    for (size_t i = 0; i < preds.size(); ++i) {
        CHECK(out[i].token == preds[i].token);
        CHECK(out[i].probability == doctest::Approx(preds[i].probability));
    }
}

TEST_CASE("locality flip happens exactly when the weighted score wins") {
    WeightTable table = WeightTable::defaults();
    ScopeIndex index;
    index.entries.push_back({"local", NameKind::VARIABLE_NAME, ScopeLevel::FUNCTION});

    auto run = [&](double p, double competitor) {
        auto out = rerank({pred("other", TypeTag::NAME, competitor),
                           pred("local", TypeTag::LOCAL_VARIABLE, p)},
                          index, table);
        return out[0].token;
    };
    // 1.625 * 0.2 = 0.325 > 0.3: flip
    CHECK(run(0.2, 0.3) == "local");
    // 1.625 * 0.2 = 0.325 < 0.4: no flip
    CHECK(run(0.2, 0.4) == "other");
}

TEST_CASE("only the first matching index entry applies") {
    WeightTable table = WeightTable::defaults();
    ScopeIndex index;
    index.entries.push_back({"x", NameKind::VARIABLE_NAME, ScopeLevel::CLASS});   // 1.125
    index.entries.push_back({"x", NameKind::VARIABLE_NAME, ScopeLevel::FUNCTION}); // 1.625
    auto out = rerank({pred("x", TypeTag::LOCAL_VARIABLE, 0.1)}, index, table);
    CHECK(out[0].probability == doctest::Approx(0.1 * 1.125).epsilon(1e-12));
}

TEST_CASE("weight table round-trips through its file form") {
    auto path = std::filesystem::temp_directory_path() / "dualfill_weights_test.json";
    save_weight_table(WeightTable::defaults(), path);
    auto loaded = load_weight_table(path);
    for (int k = 0; k < 3; ++k)
        for (int s = 0; s < 3; ++s)
            CHECK(loaded.weight[k][s] ==
                  doctest::Approx(WeightTable::defaults().weight[k][s]));
    std::filesystem::remove(path);
}

TEST_CASE("weights below one are rejected") {
    WeightTable bad = WeightTable::identity();
    bad.weight[1][1] = 0.5;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}
