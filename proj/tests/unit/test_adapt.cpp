#include <doctest.h>

#include <cmath>
#include <fstream>
#include <numeric>
#include <set>

#include "styleprof/adapt.hpp"
#include "styleprof/error.hpp"
#include "styleprof/random.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace styleprof;
using namespace styleprof::adapt;
using testing::stub_bundle;
using namespace styleprof::oracles;

namespace {

Profile profile_of(bool emo, bool fact, bool self, bool action, bool info) {
    Profile p;
    p.labels[Characteristic::Emotionality] = emo;
    p.labels[Characteristic::FactOriented] = fact;
    p.labels[Characteristic::SelfRevealing] = self;
    p.labels[Characteristic::ActionSeeking] = action;
    p.labels[Characteristic::InformationSeeking] = info;
    return p;
}

std::multiset<DirectiveKind> kinds_of(const std::vector<Directive>& ds) {
    std::multiset<DirectiveKind> out;
    for (const auto& d : ds) out.insert(d.kind);
    return out;
}

Conversation conv(std::vector<std::pair<Speaker, std::string>> turns) {
    Conversation c;
    c.id = "c";
    for (auto& [s, t] : turns) c.turns.push_back({s, std::move(t)});
    return c;
}

}  // namespace

TEST_CASE("lexicons") {
    const auto& lx = Lexicons::defaults();
    CHECK(lx.assurance.tokens.count("recommend"));
    CHECK(lx.assurance.tokens.count("offer"));
    CHECK(lx.second_person.matches("Your experience matters to us."));
    CHECK_FALSE(lx.second_person.matches("Our experience matters."));
    CHECK(lx.gratitude.version == "v1");
    const auto custom = parse_lexicon("# lexicon: demo v7\n\nAlpha\n# skipped\nbeta\n", "demo");
    CHECK(custom.version == "v7");
    CHECK(custom.tokens == std::unordered_set<std::string>{"alpha", "beta"});
    CHECK(custom.matches("ALPHA!"));
}

TEST_CASE("directives from profiles") {
    const auto fig4 = directives_for(profile_of(true, false, true, false, true));
    CHECK(kinds_of(fig4) == std::multiset<DirectiveKind>{DirectiveKind::MirrorEmotionality,
                                                         DirectiveKind::SecondPersonAcknowledgement,
                                                         DirectiveKind::AssuranceWords});
    CHECK(fig4[0].target);

    const auto fig5 = directives_for(profile_of(false, true, false, true, true));
    CHECK(kinds_of(fig5) == std::multiset<DirectiveKind>{DirectiveKind::MirrorEmotionality,
                                                         DirectiveKind::ConciseFactual,
                                                         DirectiveKind::AssuranceWords});
    for (const auto& d : fig5) {
        if (d.kind == DirectiveKind::MirrorEmotionality) CHECK_FALSE(d.target);
        if (d.kind == DirectiveKind::AssuranceWords) CHECK(d.triggered_by == Characteristic::ActionSeeking);
    }

    for (int mask = 0; mask < 32; ++mask) {
        const auto p = profile_of(mask & 1, mask & 2, mask & 4, mask & 8, mask & 16);
        const auto ds = directives_for(p);
        CHECK(ds.size() >= 1);
        CHECK(ds.size() <= 4);
        CHECK(ds == directives_for(p));
        const std::size_t want = 1 + ((mask & 4) != 0) + ((mask & 2) != 0) + ((mask & 24) != 0);
        CHECK(ds.size() == want);
    }
}

TEST_CASE("match predicates") {
    const auto bundle = stub_bundle();
    const auto& lx = Lexicons::defaults();
    const Directive second{DirectiveKind::SecondPersonAcknowledgement, false, Characteristic::SelfRevealing};
    const Directive assure{DirectiveKind::AssuranceWords, false, Characteristic::InformationSeeking};
    const Directive concise{DirectiveKind::ConciseFactual, false, Characteristic::FactOriented};
    const Directive mirror_yes{DirectiveKind::MirrorEmotionality, true, Characteristic::Emotionality};
    CHECK(check_match(second, "Your experience matters to us.", *bundle, lx));
    CHECK_FALSE(check_match(second, "Experience matters.", *bundle, lx));
    CHECK(check_match(assure, "We recommend checking the manual.", *bundle, lx));
    CHECK_FALSE(check_match(assure, "Check the manual.", *bundle, lx));
    CHECK(check_match(concise, "A fact about batteries.", *bundle, lx));
    std::string sixty;
    for (int i = 0; i < 60; ++i) sixty += "fact ";
    CHECK_FALSE(check_match(concise, sixty, *bundle, lx));
    MatchConfig loose;
    loose.concise_max_words = 100;
    CHECK(check_match(concise, sixty, *bundle, lx, loose));
    CHECK(check_match(mirror_yes, "Wow!", *bundle, lx));
    CHECK_FALSE(check_match(mirror_yes, "Fine.", *bundle, lx));
}

TEST_CASE("matching level examples") {
    const auto bundle = stub_bundle();
    const auto& lx = Lexicons::defaults();
    // Mirror + second person, both met.
    auto r = matching_level(conv({{Speaker::User, "I did it myself"}, {Speaker::Agent, "Well done, you."}}), *bundle, lx);
    CHECK(r.detected == 2);
    CHECK(r.matched == 2);
    CHECK(r.matching_level == 100.0);

    // Four directives, three met (the reply is not emotional).
    r = matching_level(conv({{Speaker::User, "Wow, myself, a fact, please"},
                             {Speaker::Agent, "You have a fact and we guarantee it."}}),
                       *bundle, lx);
    CHECK(r.detected == 4);
    CHECK(r.matched == 3);
    CHECK(r.matching_level == 75.0);

    r = matching_level(conv({{Speaker::User, "Hello"}}), *bundle, lx);
    CHECK(r.detected == 0);
    CHECK_FALSE(r.matching_level.has_value());
    CHECK(r.warnings.size() == 1);

    // Only the first agent reply counts; leading agent turns are ignored.
    r = matching_level(conv({{Speaker::Agent, "Hi, wow"},
                             {Speaker::User, "Wow"},
                             {Speaker::Agent, "Fine"},
                             {Speaker::Agent, "Wow"}}),
                       *bundle, lx);
    CHECK(r.detected == 1);
    CHECK(r.matched == 0);

    const auto a = analyze(conv({{Speaker::User, "please"}, {Speaker::Agent, "ok"}}), *bundle, lx);
    REQUIRE(a.turns.size() == 2);
    CHECK(a.turns[0].profile.has_value());
    CHECK(a.turns[1].replies_to == 0u);
    CHECK(a.turns[1].verdicts.size() == 2);
    CHECK(analysis_to_json(a).is_object());
}

TEST_CASE("matching level equals an independent recount on random conversations") {
    const auto bundle = stub_bundle();
    const auto& lx = Lexicons::defaults();
    Rng rng(42);
    for (std::size_t i = 0; i < 200; ++i) {
        const auto c = random_conversation(rng, i);
        const auto r = matching_level(c, *bundle, lx);
        const auto [detected, matched] = recount(c);
        CHECK(r.detected == detected);
        CHECK(r.matched == matched);
        if (detected == 0) {
            CHECK_FALSE(r.matching_level.has_value());
        } else {
            CHECK(*r.matching_level == 100.0 * static_cast<double>(matched) / static_cast<double>(detected));
            CHECK(*r.matching_level >= 0.0);
            CHECK(*r.matching_level <= 100.0);
        }

        // A reply that meets every directive never lowers the level.
        for (std::size_t t = 0; t + 1 < c.turns.size(); ++t) {
            if (c.turns[t].speaker != Speaker::User || c.turns[t + 1].speaker != Speaker::Agent) continue;
            auto better = c;
            const auto& u = c.turns[t].text;
            std::string reply = has(u, "wow") ? "wow" : "calm";
            reply += " you fact recommend";
            better.turns[t + 1].text = reply;
            const auto rb = matching_level(better, *bundle, lx);
            CHECK(*rb.matching_level >= *r.matching_level);
            break;
        }
    }
}

TEST_CASE("satisfaction heuristic") {
    const auto bundle = stub_bundle();
    const auto& lx = Lexicons::defaults();
    CHECK(satisfaction_heuristic(conv({{Speaker::User, "Thanks, that solved it!"}}), *bundle, lx) ==
          Satisfaction::Satisfied);
    CHECK(satisfaction_heuristic(conv({{Speaker::User, "Wow. This is useless."}}), *bundle, lx) ==
          Satisfaction::Dissatisfied);
    CHECK(satisfaction_heuristic(conv({{Speaker::User, "This is useless."}}), *bundle, lx) ==
          Satisfaction::Neutral);
    CHECK(satisfaction_heuristic(conv({{Speaker::User, "ok"}}), *bundle, lx) == Satisfaction::Neutral);
    CHECK(satisfaction_heuristic(conv({{Speaker::Agent, "hello"}}), *bundle, lx) == Satisfaction::Unset);

    // Only the final user turn matters.
    auto c = conv({{Speaker::User, "thanks"}, {Speaker::Agent, "sure"}, {Speaker::User, "ok"}, {Speaker::Agent, "bye"}});
    const auto base = satisfaction_heuristic(c, *bundle, lx);
    c.turns[0].text = "wow this is terrible";
    c.turns[1].text = "thanks";
    CHECK(satisfaction_heuristic(c, *bundle, lx) == base);

    CHECK(ordinal(Satisfaction::Dissatisfied) == 0);
    CHECK(ordinal(Satisfaction::Satisfied) == 2);
    CHECK(parse_satisfaction("neutral") == Satisfaction::Neutral);
}

TEST_CASE("association") {
    std::vector<AssociationInput> mono{{10, Satisfaction::Dissatisfied}, {10, Satisfaction::Dissatisfied},
                                       {50, Satisfaction::Neutral},      {50, Satisfaction::Neutral},
                                       {90, Satisfaction::Satisfied},    {90, Satisfaction::Satisfied}};
    CHECK(*association(mono).spearman == doctest::Approx(1.0).epsilon(1e-12));
    auto rev = mono;
    for (auto& m : rev) m.matching_level = 100.0 - *m.matching_level;
    CHECK(*association(rev).spearman == doctest::Approx(-1.0).epsilon(1e-12));

    auto flat = mono;
    for (auto& m : flat) m.satisfaction = Satisfaction::Neutral;
    CHECK_FALSE(association(flat).spearman.has_value());

    auto sparse = mono;
    sparse.push_back({std::nullopt, Satisfaction::Satisfied});
    sparse.push_back({40.0, Satisfaction::Unset});
    CHECK(association(sparse).n == 6);
    CHECK_THROWS_AS(association(std::span(mono).first(4)), Error);

    CHECK(average_ranks(std::vector<double>{3, 1, 3, 2}) == std::vector<double>{3.5, 1, 3.5, 2});

    Rng rng(7);
    std::vector<double> x, y;
    std::vector<AssociationInput> batch;
    for (int i = 0; i < 200; ++i) {
        const double level = static_cast<double>(rng.uniform_index(11)) * 10.0;
        const auto s = static_cast<int>(rng.uniform_index(3));
        x.push_back(level);
        y.push_back(s);
        batch.push_back({level, s == 0 ? Satisfaction::Dissatisfied : s == 1 ? Satisfaction::Neutral : Satisfaction::Satisfied});
    }
    const auto a = association(batch);
    CHECK(std::abs(*a.spearman - brute_spearman(x, y)) < 1e-9);
    CHECK(std::abs(*spearman(x, y) - brute_spearman(x, y)) < 1e-9);
    std::size_t total = 0;
    for (const auto& row : a.contingency) total += std::accumulate(row.begin(), row.end(), std::size_t{0});
    CHECK(total == 200);
    CHECK(a.tercile_cutoffs[0] <= a.tercile_cutoffs[1]);
    CHECK(association_to_json(a).is_object());
}

TEST_CASE("conversation schema") {
    const auto c = parse_conversation(nlohmann::json::parse(
        R"({"id":"x","turns":[{"speaker":"user","text":"hi"}],"satisfaction":null})"));
    CHECK(c.satisfaction == Satisfaction::Unset);
    CHECK(parse_conversation(conversation_to_json(c)).turns.size() == 1);
    try {
        parse_conversation(nlohmann::json::parse(R"({"id":"x","turns":[{"speaker":"bot","text":"hi"}]})"));
        FAIL("expected a schema error");
    } catch (const SchemaError& e) {
        CHECK(e.pointer() == "/turns/0/speaker");
    }
    const auto all = parse_conversations_jsonl(corpus::read_file(testing::fixture("conversations_50.jsonl")));
    CHECK(all.size() == 50);
}

TEST_CASE("bundles on disk") {
    PerCharacteristic<ModelBundle::Ptr> models;
    model::TrainOptions opt;
    opt.linear.epochs = 3;
    for (auto c : kAllCharacteristics) {
        models[c] = std::shared_ptr<const model::Classifier>(
            model::train_classifier(testing::synthetic_labeled(120, 1.0, 30, c), c, opt));
    }
    const ModelBundle bundle(models);
    CHECK(bundle.complete());
    testing::TempDir dir;
    bundle.save(dir.path());
    const auto back = ModelBundle::load(dir.path());
    CHECK(back.fingerprints() == bundle.fingerprints());
    const auto p1 = profile("Wow, I did it myself!", bundle);
    CHECK(profile("Wow, I did it myself!", back) == p1);
    for (auto c : kAllCharacteristics) CHECK(p1.labels[c] == (p1.probabilities[c] >= 0.5));

    // A model file swapped for another task's is refused.
    std::filesystem::copy_file(dir / "emotionality.model", dir / "fact_oriented.model",
                               std::filesystem::copy_options::overwrite_existing);
    try {
        ModelBundle::load(dir.path());
        FAIL("expected a format error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::Format);
    }
    std::filesystem::remove(dir / "fact_oriented.model");
    try {
        ModelBundle::load(dir.path());
        FAIL("expected a not-found error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::NotFound);
    }
    CHECK_FALSE(ModelBundle().complete());
    CHECK_THROWS_AS(ModelBundle().at(Characteristic::Emotionality), Error);
}
