#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "eqperf/grammar.hpp"

using namespace eqperf;

namespace {

ChoicePoint& point(ProbabilityTable& t, const std::string& name) {
    for (auto& p : t.points)
        if (p.name == name) return p;
    REQUIRE(false);
    return t.points.front();
}

}  // namespace

TEST_CASE("initial table is valid and biased toward plain table references") {
    ProbabilityTable t = init_probability_table();
    CHECK(probability_table_valid(t, 0.02));

    CHECK(t.prob("table_ref", "table_simple") == doctest::Approx(0.5));
    CHECK(t.prob("table_ref", "join_left") == doctest::Approx(0.16));
    CHECK(t.prob("table_ref", "join_cross") == doctest::Approx(0.17));
    CHECK(t.prob("table_ref", "join_inner") == doctest::Approx(0.17));
    CHECK(t.prob("join_cond", "bool_expr") == doctest::Approx(0.5));

    // Everything else starts uniform.
    CHECK(t.prob("where", "yes") == doctest::Approx(0.5));
    CHECK(t.prob("cmp_op", "eq") == doctest::Approx(1.0 / 6));
    CHECK(t.prob("agg_fn", "avg") == doctest::Approx(0.2));
    CHECK(t.prob("union", "union_all") == doctest::Approx(1.0 / 3));
}

TEST_CASE("shifting rescales siblings proportionally") {
    ProbabilityTable t = init_probability_table();
    ChoicePoint& cp = point(t, "table_ref");
    shift_probability(cp, "table_simple", 0.05, 0.02);
    CHECK(cp.find("table_simple")->prob == doctest::Approx(0.55));
    CHECK(cp.find("join_left")->prob == doctest::Approx(0.144));
    CHECK(cp.find("join_cross")->prob == doctest::Approx(0.153));
    CHECK(cp.find("join_inner")->prob == doctest::Approx(0.153));
    CHECK(probability_table_valid(t, 0.02));
}

TEST_CASE("shifting never pushes an alternative below the floor") {
    ProbabilityTable t = init_probability_table();
    ChoicePoint& cp = point(t, "where");
    for (int i = 0; i < 100; ++i) shift_probability(cp, "yes", 0.05, 0.02);
    CHECK(cp.find("no")->prob >= 0.02 - 1e-12);
    CHECK(cp.find("yes")->prob == doctest::Approx(0.98));
    CHECK(probability_table_valid(t, 0.02));

    for (int i = 0; i < 100; ++i) shift_probability(cp, "yes", -0.05, 0.02);
    CHECK(cp.find("yes")->prob >= 0.02 - 1e-12);
    CHECK(probability_table_valid(t, 0.02));
}

TEST_CASE("rewarding a set of entities raises each one") {
    ProbabilityTable t = init_probability_table();
    EntitySet ents = {{"group_by", "yes"}, {"limit", "yes"}};
    double g0 = t.prob("group_by", "yes");
    double l0 = t.prob("limit", "yes");
    reward_entities(t, ents, 0.05, 0.02);
    CHECK(t.prob("group_by", "yes") == doctest::Approx(g0 + 0.05));
    CHECK(t.prob("limit", "yes") == doctest::Approx(l0 + 0.05));
    CHECK(probability_table_valid(t, 0.02));
}

TEST_CASE("mutation feedback rewards productive queries and penalizes barren ones") {
    ProbabilityTable t = init_probability_table();
    RuleFrequencyTable freq;
    for (int id = 0; id < 10; ++id) freq.ensure(id);
    for (int i = 0; i < 100; ++i) freq.record(1);  // rule 1 is common

    EntitySet ents = {{"where", "yes"}};
    double before = t.prob("where", "yes");
    update_from_mutator(t, freq, ents, {1}, true);
    CHECK(t.prob("where", "yes") == doctest::Approx(before + 0.05));

    before = t.prob("where", "yes");
    update_from_mutator(t, freq, ents, {}, false);
    CHECK(t.prob("where", "yes") == doctest::Approx(before - 0.05));
    CHECK(probability_table_valid(t, 0.02));
}

TEST_CASE("rarely fired rules double the reward step") {
    ProbabilityTable t = init_probability_table();
    RuleFrequencyTable freq;
    for (int id = 0; id < 8; ++id) freq.ensure(id);
    for (int i = 0; i < 50; ++i) {
        freq.record(1);
        freq.record(2);
        freq.record(3);
        freq.record(4);
        freq.record(5);
        freq.record(6);
    }
    // Rules 0 and 7 never fired: lowest quartile.
    CHECK(freq.lowest_quartile(0));
    CHECK(freq.lowest_quartile(7));
    CHECK_FALSE(freq.lowest_quartile(1));

    EntitySet ents = {{"where", "yes"}};
    double before = t.prob("where", "yes");
    update_from_mutator(t, freq, ents, {0}, true);
    CHECK(t.prob("where", "yes") == doctest::Approx(before + 0.10));
}

TEST_CASE("validation feedback is larger and only fires on confirmed bugs") {
    ProbabilityTable t = init_probability_table();
    EntitySet ents = {{"order_by", "yes"}};
    double before = t.prob("order_by", "yes");
    update_from_validator(t, ents, false);
    CHECK(t.prob("order_by", "yes") == doctest::Approx(before));

    update_from_validator(t, ents, true);
    CHECK(t.prob("order_by", "yes") == doctest::Approx(before + 0.10));
    CHECK(probability_table_valid(t, 0.02));
}

TEST_CASE("sampling follows the table and ignores unknown names") {
    ProbabilityTable t = init_probability_table();
    ChoicePoint& cp = point(t, "where");
    shift_probability(cp, "yes", 0.4, 0.02);  // 0.9 yes / 0.1 no

    Rng rng(7);
    int yes = 0;
    for (int i = 0; i < 2000; ++i)
        if (t.sample("where", rng) == "yes") ++yes;
    CHECK(yes > 1700);
    CHECK(yes < 1990);

    CHECK(t.prob("no_such_point", "x") == doctest::Approx(0.0));
}

TEST_CASE("ten thousand random updates preserve sums and the floor") {
    ProbabilityTable t = init_probability_table();
    RuleFrequencyTable freq;
    for (int id = 0; id < 70; ++id) freq.ensure(id);
    Rng rng(123);

    std::vector<Entity> all;
    for (const auto& p : t.points)
        for (const auto& a : p.alts) all.push_back({p.name, a.name});

    for (int i = 0; i < 10000; ++i) {
        EntitySet ents;
        size_t n = 1 + rng.below(4);
        for (size_t k = 0; k < n; ++k) ents.insert(all[rng.below(all.size())]);
        switch (rng.below(3)) {
            case 0: {
                std::vector<int> fired = {static_cast<int>(rng.below(70))};
                freq.record(fired[0]);
                update_from_mutator(t, freq, ents, fired, true);
                break;
            }
            case 1:
                update_from_mutator(t, freq, ents, {}, false);
                break;
            default:
                update_from_validator(t, ents, rng.chance(0.5));
                break;
        }
    }
    CHECK(probability_table_valid(t, 0.02, 1e-9));
    for (const auto& p : t.points) {
        double sum = 0.0;
        for (const auto& a : p.alts) {
            sum += a.prob;
            CHECK(a.prob >= 0.02 - 1e-9);
        }
        CHECK(std::fabs(sum - 1.0) < 1e-9);
    }
}
