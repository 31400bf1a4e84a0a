#include "styleprof/adapt.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "styleprof/corpus.hpp"
#include "styleprof/embedded_data.hpp"
#include "styleprof/features.hpp"
#include "styleprof/hash.hpp"
#include "styleprof/utf8.hpp"

namespace styleprof::adapt {

using nlohmann::json;
using nlohmann::ordered_json;

// --- lexicons ----------------------------------------------------------------------------

bool Lexicon::matches(std::string_view text) const {
    for (const auto& tok : features::tokenize(text, true)) {
        if (tokens.count(tok)) return true;
    }
    return false;
}

Lexicon parse_lexicon(std::string_view content, std::string name) {
    Lexicon lex;
    lex.name = std::move(name);
    std::size_t pos = 0;
    while (pos <= content.size()) {
        std::size_t end = content.find('\n', pos);
        if (end == std::string_view::npos) end = content.size();
        const std::string line = utf8::trim(content.substr(pos, end - pos));
        pos = end + 1;
        if (line.empty()) continue;
        if (line[0] == '#') {
            constexpr std::string_view tag = "# lexicon:";
            if (line.rfind(tag, 0) == 0) {
                const std::string rest = utf8::trim(std::string_view(line).substr(tag.size()));
                const auto space = rest.find(' ');
                if (space != std::string::npos) lex.version = utf8::trim(rest.substr(space + 1));
            }
            continue;
        }
        std::string token;
        for (char32_t cp : utf8::decode(line)) utf8::append(token, utf8::to_lower(cp));
        lex.tokens.insert(std::move(token));
    }
    return lex;
}

Lexicon load_lexicon(const std::filesystem::path& path, std::string name) {
    return parse_lexicon(corpus::read_file(path), std::move(name));
}

const Lexicons& Lexicons::defaults() {
    static const Lexicons lex{parse_lexicon(embedded::lexicon_second_person(), "second_person"),
                              parse_lexicon(embedded::lexicon_assurance(), "assurance"),
                              parse_lexicon(embedded::lexicon_gratitude(), "gratitude"),
                              parse_lexicon(embedded::lexicon_anger(), "anger")};
    return lex;
}

// --- bundle ------------------------------------------------------------------------------------

ModelBundle::ModelBundle(PerCharacteristic<Ptr> models) : models_(std::move(models)) {
    for (auto c : kAllCharacteristics) {
        if (models_[c]) fingerprints_[c] = models_[c]->fingerprint();
    }
}

ModelBundle ModelBundle::load(const std::filesystem::path& dir) {
    const auto manifest_path = dir / std::string(kBundleManifest);
    if (!std::filesystem::exists(manifest_path)) {
        throw Error(ErrorCode::NotFound, "no " + std::string(kBundleManifest) + " in " + dir.string());
    }
    json manifest;
    try {
        manifest = json::parse(corpus::read_file(manifest_path));
    } catch (const json::exception& e) {
        throw Error(ErrorCode::Format, std::string("bad bundle manifest: ") + e.what());
    }
    PerCharacteristic<Ptr> models;
    for (auto c : kAllCharacteristics) {
        const std::string name(wire_name(c));
        if (!manifest.contains("models") || !manifest["models"].contains(name)) {
            throw Error(ErrorCode::NotFound, "bundle has no model for " + name);
        }
        const auto& entry = manifest["models"][name];
        const auto path = dir / entry.at("file").get<std::string>();
        if (!std::filesystem::exists(path)) {
            throw Error(ErrorCode::NotFound, "missing model file " + path.string());
        }
        const std::string bytes = corpus::read_file(path);
        if (fingerprint_of(bytes) != entry.at("fingerprint").get<std::string>()) {
            throw Error(ErrorCode::Format, "fingerprint mismatch for " + name + " model");
        }
        auto clf = model::deserialize(bytes);
        if (clf->task() && *clf->task() != c) {
            throw Error(ErrorCode::Format, "model in " + path.string() + " was trained for " +
                                               std::string(wire_name(*clf->task())));
        }
        models[c] = std::move(clf);
    }
    return ModelBundle(std::move(models));
}

void ModelBundle::save(const std::filesystem::path& dir) const {
    std::filesystem::create_directories(dir);
    ordered_json manifest;
    manifest["format"] = "styleprof-bundle";
    manifest["version"] = 1;
    for (auto c : kAllCharacteristics) {
        const std::string name(wire_name(c));
        const auto& clf = at(c);
        const std::string bytes = clf.serialize();
        corpus::write_file(dir / (name + ".model"), bytes);
        manifest["models"][name] = {{"file", name + ".model"},
                                    {"kind", std::string(model::to_string(clf.kind()))},
                                    {"fingerprint", fingerprint_of(bytes)}};
    }
    corpus::write_file(dir / std::string(kBundleManifest), manifest.dump(2) + "\n");
}

bool ModelBundle::complete() const {
    return std::all_of(models_.values.begin(), models_.values.end(), [](const Ptr& p) { return p != nullptr; });
}

const model::Classifier& ModelBundle::at(Characteristic c) const {
    if (!models_[c]) {
        throw Error(ErrorCode::NotFound, "no model for " + std::string(wire_name(c)));
    }
    return *models_[c];
}

PerCharacteristic<std::string> ModelBundle::fingerprints() const { return fingerprints_; }

// --- profiles and directives -----------------------------------------------------------------------

Profile profile(std::string_view text, const ModelBundle& bundle) {
    Profile p;
    for (auto c : kAllCharacteristics) {
        const double prob = bundle.at(c).probability_yes(text);
        p.probabilities[c] = prob;
        p.labels[c] = prob >= 0.5;
    }
    p.fingerprints = bundle.fingerprints();
    return p;
}

std::string_view to_string(DirectiveKind kind) {
    switch (kind) {
        case DirectiveKind::MirrorEmotionality: return "mirror_emotionality";
        case DirectiveKind::SecondPersonAcknowledgement: return "second_person_acknowledgement";
        case DirectiveKind::ConciseFactual: return "concise_factual";
        case DirectiveKind::AssuranceWords: return "assurance_words";
    }
    return "?";
}

std::vector<Directive> directives_for(const Profile& p) {
    using C = Characteristic;
    std::vector<Directive> out;
    out.push_back({DirectiveKind::MirrorEmotionality, p.labels[C::Emotionality], C::Emotionality});
    if (p.labels[C::SelfRevealing]) {
        out.push_back({DirectiveKind::SecondPersonAcknowledgement, false, C::SelfRevealing});
    }
    if (p.labels[C::FactOriented]) {
        out.push_back({DirectiveKind::ConciseFactual, false, C::FactOriented});
    }
    if (p.labels[C::ActionSeeking] || p.labels[C::InformationSeeking]) {
        out.push_back({DirectiveKind::AssuranceWords, false,
                       p.labels[C::ActionSeeking] ? C::ActionSeeking : C::InformationSeeking});
    }
    return out;
}

bool check_match(const Directive& d, std::string_view reply, const ModelBundle& bundle,
                 const Lexicons& lexicons, const MatchConfig& config) {
    switch (d.kind) {
        case DirectiveKind::MirrorEmotionality:
            return bundle.at(Characteristic::Emotionality).predict(reply) == d.target;
        case DirectiveKind::SecondPersonAcknowledgement:
            return lexicons.second_person.matches(reply);
        case DirectiveKind::ConciseFactual:
            return utf8::word_count(reply) <= config.concise_max_words &&
                   bundle.at(Characteristic::FactOriented).predict(reply);
        case DirectiveKind::AssuranceWords:
            return lexicons.assurance.matches(reply);
    }
    return false;
}

// --- conversations --------------------------------------------------------------------------------

std::string_view to_string(Speaker s) { return s == Speaker::User ? "user" : "agent"; }

std::string_view to_string(Satisfaction s) {
    switch (s) {
        case Satisfaction::Satisfied: return "satisfied";
        case Satisfaction::Neutral: return "neutral";
        case Satisfaction::Dissatisfied: return "dissatisfied";
        case Satisfaction::Unset: return "unset";
    }
    return "?";
}

std::optional<Satisfaction> parse_satisfaction(std::string_view s) {
    if (s == "satisfied") return Satisfaction::Satisfied;
    if (s == "neutral") return Satisfaction::Neutral;
    if (s == "dissatisfied") return Satisfaction::Dissatisfied;
    if (s == "unset") return Satisfaction::Unset;
    return std::nullopt;
}

int ordinal(Satisfaction s) {
    switch (s) {
        case Satisfaction::Dissatisfied: return 0;
        case Satisfaction::Neutral: return 1;
        case Satisfaction::Satisfied: return 2;
        case Satisfaction::Unset: break;
    }
    throw Error(ErrorCode::InvalidArgument, "unset satisfaction has no ordinal");
}

Conversation parse_conversation(const json& j) {
    if (!j.is_object()) throw SchemaError("", "conversation must be an object");
    Conversation c;
    if (!j.contains("id") || !j["id"].is_string()) throw SchemaError("/id", "id must be a string");
    c.id = j["id"].get<std::string>();
    if (!j.contains("turns") || !j["turns"].is_array()) {
        throw SchemaError("/turns", "turns must be an array");
    }
    const auto& turns = j["turns"];
    for (std::size_t i = 0; i < turns.size(); ++i) {
        const auto& t = turns[i];
        const std::string base = "/turns/" + std::to_string(i);
        if (!t.is_object()) throw SchemaError(base, "turn must be an object");
        if (!t.contains("speaker") || !t["speaker"].is_string()) {
            throw SchemaError(base + "/speaker", "speaker must be \"user\" or \"agent\"");
        }
        const auto speaker = t["speaker"].get<std::string>();
        if (speaker != "user" && speaker != "agent") {
            throw SchemaError(base + "/speaker", "speaker must be \"user\" or \"agent\"");
        }
        if (!t.contains("text") || !t["text"].is_string()) {
            throw SchemaError(base + "/text", "text must be a string");
        }
        c.turns.push_back({speaker == "user" ? Speaker::User : Speaker::Agent,
                           t["text"].get<std::string>()});
    }
    if (j.contains("satisfaction") && !j["satisfaction"].is_null()) {
        if (!j["satisfaction"].is_string()) {
            throw SchemaError("/satisfaction", "satisfaction must be a string or null");
        }
        auto s = parse_satisfaction(j["satisfaction"].get<std::string>());
        if (!s) throw SchemaError("/satisfaction", "unknown satisfaction value");
        c.satisfaction = *s;
    }
    return c;
}

json conversation_to_json(const Conversation& c) {
    ordered_json j;
    j["id"] = c.id;
    j["turns"] = ordered_json::array();
    for (const auto& t : c.turns) {
        j["turns"].push_back({{"speaker", std::string(to_string(t.speaker))}, {"text", t.text}});
    }
    j["satisfaction"] = c.satisfaction == Satisfaction::Unset
                            ? ordered_json(nullptr)
                            : ordered_json(std::string(to_string(c.satisfaction)));
    return json::parse(j.dump());
}

std::vector<Conversation> parse_conversations_jsonl(std::string_view content) {
    std::vector<Conversation> out;
    std::size_t pos = 0, line_no = 0;
    while (pos < content.size()) {
        std::size_t end = content.find('\n', pos);
        if (end == std::string_view::npos) end = content.size();
        const auto line = content.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (utf8::trim(line).empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw Error(ErrorCode::Parse, std::string("invalid JSON: ") + e.what(), line_no);
        }
        try {
            out.push_back(parse_conversation(j));
        } catch (const SchemaError& e) {
            throw Error(ErrorCode::Schema, std::string(e.what()) + " at " + e.pointer(), line_no);
        }
    }
    return out;
}

ConversationAnalysis analyze(const Conversation& conv, const ModelBundle& bundle,
                             const Lexicons& lexicons, const MatchConfig& config) {
    ConversationAnalysis a;
    a.id = conv.id;
    a.turns.resize(conv.turns.size());
    for (std::size_t i = 0; i < conv.turns.size(); ++i) {
        a.turns[i].index = i;
        a.turns[i].speaker = conv.turns[i].speaker;
    }
    for (std::size_t i = 0; i < conv.turns.size(); ++i) {
        if (conv.turns[i].speaker != Speaker::User) continue;
        auto& ut = a.turns[i];
        ut.profile = profile(conv.turns[i].text, bundle);
        ut.directives = directives_for(*ut.profile);
        const bool answered = i + 1 < conv.turns.size() && conv.turns[i + 1].speaker == Speaker::Agent;
        if (!answered) {
            a.report.warnings.push_back("turn " + std::to_string(i) +
                                        ": user turn without an agent reply; directives not scored");
            continue;
        }
        auto& at = a.turns[i + 1];
        at.replies_to = i;
        for (const auto& d : ut.directives) {
            const bool ok = check_match(d, conv.turns[i + 1].text, bundle, lexicons, config);
            at.verdicts.push_back({d, ok});
            ++a.report.detected;
            if (ok) ++a.report.matched;
        }
    }
    if (a.report.detected > 0) {
        a.report.matching_level = 100.0 * static_cast<double>(a.report.matched) /
                                  static_cast<double>(a.report.detected);
    }
    a.satisfaction = satisfaction_heuristic(conv, bundle, lexicons);
    return a;
}

MatchingReport matching_level(const Conversation& conv, const ModelBundle& bundle,
                              const Lexicons& lexicons, const MatchConfig& config) {
    return analyze(conv, bundle, lexicons, config).report;
}

Satisfaction satisfaction_heuristic(const Conversation& conv, const ModelBundle& bundle,
                                    const Lexicons& lexicons) {
    const Turn* last = nullptr;
    for (const auto& t : conv.turns) {
        if (t.speaker == Speaker::User) last = &t;
    }
    if (!last) return Satisfaction::Unset;
    if (lexicons.gratitude.matches(last->text)) return Satisfaction::Satisfied;
    if (lexicons.anger.matches(last->text) &&
        bundle.at(Characteristic::Emotionality).predict(last->text)) {
        return Satisfaction::Dissatisfied;
    }
    return Satisfaction::Neutral;
}

json profile_to_json(const Profile& p) {
    ordered_json j;
    for (auto c : kAllCharacteristics) {
        const std::string name(wire_name(c));
        j["labels"][name] = p.labels[c];
    }
    for (auto c : kAllCharacteristics) j["probabilities"][std::string(wire_name(c))] = p.probabilities[c];
    for (auto c : kAllCharacteristics) j["model_fingerprints"][std::string(wire_name(c))] = p.fingerprints[c];
    return json::parse(j.dump());
}

json directive_to_json(const Directive& d) {
    json j{{"kind", std::string(to_string(d.kind))},
           {"triggered_by", std::string(wire_name(d.triggered_by))}};
    if (d.kind == DirectiveKind::MirrorEmotionality) j["target"] = d.target;
    return j;
}

json analysis_to_json(const ConversationAnalysis& a) {
    json turns = json::array();
    for (const auto& t : a.turns) {
        json jt{{"index", t.index}, {"speaker", std::string(to_string(t.speaker))}};
        if (t.profile) {
            jt["profile"] = profile_to_json(*t.profile);
            json ds = json::array();
            for (const auto& d : t.directives) ds.push_back(directive_to_json(d));
            jt["directives"] = std::move(ds);
        }
        if (t.replies_to) {
            jt["replies_to"] = *t.replies_to;
            json vs = json::array();
            for (const auto& v : t.verdicts) {
                json jv = directive_to_json(v.directive);
                jv["matched"] = v.matched;
                vs.push_back(std::move(jv));
            }
            jt["verdicts"] = std::move(vs);
        }
        turns.push_back(std::move(jt));
    }
    json report{{"detected", a.report.detected},
                {"matched", a.report.matched},
                {"matching_level", a.report.matching_level ? json(*a.report.matching_level) : json(nullptr)},
                {"warnings", a.report.warnings}};
    return json{{"id", a.id},
                {"turns", std::move(turns)},
                {"matching", std::move(report)},
                {"satisfaction_heuristic", std::string(to_string(a.satisfaction))}};
}

// --- association ------------------------------------------------------------------------------------

std::vector<double> average_ranks(std::span<const double> values) {
    const std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
        const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
        i = j + 1;
    }
    return ranks;
}

std::optional<double> spearman(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw Error(ErrorCode::InvalidArgument, "spearman needs aligned inputs");
    const auto rx = average_ranks(x), ry = average_ranks(y);
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
    const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        sxy += (rx[i] - mx) * (ry[i] - my);
        sxx += (rx[i] - mx) * (rx[i] - mx);
        syy += (ry[i] - my) * (ry[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0) return std::nullopt;
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

Association association(std::span<const AssociationInput> batch) {
    std::vector<double> levels, sats;
    for (const auto& b : batch) {
        if (!b.matching_level || b.satisfaction == Satisfaction::Unset) continue;
        levels.push_back(*b.matching_level);
        sats.push_back(static_cast<double>(ordinal(b.satisfaction)));
    }
    if (levels.size() < 5) {
        throw Error(ErrorCode::InvalidArgument,
                    "association needs at least 5 conversations with a matching level, got " +
                        std::to_string(levels.size()));
    }
    Association a;
    a.n = levels.size();
    a.spearman = spearman(levels, sats);
    auto sorted = levels;
    std::sort(sorted.begin(), sorted.end());
    a.tercile_cutoffs = {sorted[(a.n - 1) / 3], sorted[2 * (a.n - 1) / 3]};
    for (std::size_t i = 0; i < a.n; ++i) {
        const std::size_t tercile =
            levels[i] <= a.tercile_cutoffs[0] ? 0 : (levels[i] <= a.tercile_cutoffs[1] ? 1 : 2);
        ++a.contingency[static_cast<std::size_t>(sats[i])][tercile];
    }
    return a;
}

json association_to_json(const Association& a) {
    ordered_json j;
    j["n"] = a.n;
    j["spearman"] = a.spearman ? ordered_json(*a.spearman) : ordered_json(nullptr);
    j["tercile_cutoffs"] = a.tercile_cutoffs;
    const char* names[] = {"dissatisfied", "neutral", "satisfied"};
    for (std::size_t s = 0; s < 3; ++s) j["contingency"][names[s]] = a.contingency[s];
    return json::parse(j.dump());
}

}  // namespace styleprof::adapt
