#include <doctest.h>

#include <fstream>

#include "styleprof/error.hpp"
#include "styleprof/model.hpp"
#include "test_support.hpp"

using namespace styleprof;
using namespace styleprof::model;

namespace {

TrainOptions small_options(ModelKind kind) {
    TrainOptions o;
    o.kind = kind;
    o.seed = 5;
    o.ccnn.max_len = 100;
    o.ccnn.embed_dim = 6;
    o.ccnn.filters_per_kernel = 6;
    o.seqnet.embed_dim = 8;
    o.seqnet.hidden_dim = 6;
    o.seqnet.attention_dim = 6;
    o.seqnet.dense_dims = {8, 8, 8};
    o.train.max_epochs = 2;
    return o;
}

}  // namespace

TEST_CASE("model kinds") {
    for (auto k : {ModelKind::NgSvm, ModelKind::CharCnn, ModelKind::SeqNet}) {
        CHECK(parse_model_kind(to_string(k)) == k);
    }
    CHECK_FALSE(parse_model_kind("svm2").has_value());
}

TEST_CASE("container round trip for every kind") {
    const auto data = testing::synthetic_labeled(300, 0.9, 21);
    testing::TempDir dir;
    for (auto kind : {ModelKind::NgSvm, ModelKind::CharCnn, ModelKind::SeqNet}) {
        INFO(to_string(kind));
        const auto clf = train_classifier(data, Characteristic::Emotionality, small_options(kind));
        CHECK(clf->kind() == kind);
        CHECK(clf->task() == Characteristic::Emotionality);
        const auto bytes = clf->serialize();
        CHECK(bytes.substr(0, 8) == kMagic);
        const auto header = read_header(bytes);
        CHECK(header.is_object());

        const auto back = deserialize(bytes);
        CHECK(back->kind() == kind);
        CHECK(back->task() == clf->task());
        CHECK(back->serialize() == bytes);
        CHECK(back->fingerprint() == clf->fingerprint());
        for (std::size_t i = 0; i < 40; ++i) {
            CHECK(back->probability_yes(data[i].text) == clf->probability_yes(data[i].text));
            CHECK(clf->predict(data[i].text) == (clf->probability_yes(data[i].text) >= 0.5));
        }
        std::vector<std::string> texts;
        for (std::size_t i = 0; i < 20; ++i) texts.push_back(data[i].text);
        const auto batch = clf->probability_batch(texts);
        for (std::size_t i = 0; i < texts.size(); ++i) CHECK(batch[i] == clf->probability_yes(texts[i]));

        const auto path = dir / (std::string(to_string(kind)) + ".model");
        clf->save(path);
        CHECK(load_classifier(path)->fingerprint() == clf->fingerprint());

        // Same seed, same bytes.
        CHECK(train_classifier(data, Characteristic::Emotionality, small_options(kind))->serialize() == bytes);
        CHECK(clf->describe().is_object());
    }
}

TEST_CASE("damaged containers are rejected") {
    const auto data = testing::synthetic_labeled(200, 0.9, 22);
    const auto bytes = train_classifier(data, Characteristic::FactOriented, small_options(ModelKind::NgSvm))->serialize();

    auto bad_magic = bytes;
    bad_magic[0] = 'X';
    try {
        deserialize(bad_magic);
        FAIL("expected a format error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::Format);
    }
    CHECK_THROWS_AS(deserialize(bytes.substr(0, bytes.size() - 8)), Error);
    CHECK_THROWS_AS(deserialize(bytes.substr(0, 10)), Error);
    CHECK_THROWS_AS(deserialize(""), Error);
    CHECK_THROWS_AS(deserialize(bytes + "extra"), Error);

    testing::TempDir dir;
    try {
        load_classifier(dir / "missing.model");
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::Io);
    }
}

TEST_CASE("stub classifiers are not containers") {
    StubClassifier s([](std::string_view) { return 0.5; });
    CHECK(s.predict("anything"));
    CHECK_THROWS_AS(deserialize(s.serialize()), Error);
}
