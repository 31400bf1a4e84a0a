#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <memory>
#include <nlohmann/json.hpp>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

#include "styleprof/characteristic.hpp"
#include "styleprof/error.hpp"
#include "styleprof/model.hpp"

namespace styleprof::adapt {

// --- lexicons ----------------------------------------------------------------------------

/// Lowercased single tokens; lines starting with '#' are comments. A
/// "# lexicon: <name> <version>" comment sets the version.
struct Lexicon {
    std::string name;
    std::string version;
    std::unordered_set<std::string> tokens;

    /// True if any tokenizer token of `text` is in the lexicon.
    bool matches(std::string_view text) const;
};

Lexicon parse_lexicon(std::string_view content, std::string name);
Lexicon load_lexicon(const std::filesystem::path& path, std::string name);

struct Lexicons {
    Lexicon second_person;
    Lexicon assurance;
    Lexicon gratitude;
    Lexicon anger;

    /// The versioned lists compiled in from data/lexicons.
    static const Lexicons& defaults();
};

// --- model bundle ----------------------------------------------------------------------------

/// One classifier per characteristic. On disk: a directory holding
/// `<task>.model` files and bundle.json with their fingerprints.
class ModelBundle {
public:
    using Ptr = std::shared_ptr<const model::Classifier>;

    ModelBundle() = default;
    explicit ModelBundle(PerCharacteristic<Ptr> models);

    /// Throws NotFound for a missing file and Format for a fingerprint
    /// mismatch or a model trained for another task.
    static ModelBundle load(const std::filesystem::path& dir);
    void save(const std::filesystem::path& dir) const;

    bool complete() const;
    /// Throws NotFound when the characteristic has no model.
    const model::Classifier& at(Characteristic c) const;
    PerCharacteristic<std::string> fingerprints() const;

private:
    PerCharacteristic<Ptr> models_;
    PerCharacteristic<std::string> fingerprints_;
};

inline constexpr std::string_view kBundleManifest = "bundle.json";

// --- profiles and directives ---------------------------------------------------------------

struct Profile {
    PerCharacteristic<bool> labels;
    PerCharacteristic<double> probabilities;
    PerCharacteristic<std::string> fingerprints;

    friend bool operator==(const Profile&, const Profile&) = default;
};

/// label = P(yes) >= 0.5 per characteristic.
Profile profile(std::string_view text, const ModelBundle& bundle);

enum class DirectiveKind { MirrorEmotionality, SecondPersonAcknowledgement, ConciseFactual, AssuranceWords };

std::string_view to_string(DirectiveKind kind);

struct Directive {
    DirectiveKind kind = DirectiveKind::MirrorEmotionality;
    /// Target emotionality; only meaningful for MirrorEmotionality.
    bool target = false;
    Characteristic triggered_by = Characteristic::Emotionality;

    friend bool operator==(const Directive&, const Directive&) = default;
};

/// MirrorEmotionality(profile emotionality) always; SecondPersonAcknowledgement
/// iff self-revealing; ConciseFactual iff fact-oriented; AssuranceWords iff
/// action- or information-seeking (triggered_by action-seeking when both).
std::vector<Directive> directives_for(const Profile& profile);

struct MatchConfig {
    std::size_t concise_max_words = 40;
    /// Identifier of the predicate set below.
    std::string predicates = "match-predicates-v1";
};

/// MirrorEmotionality: emotionality label of the reply equals the target.
/// SecondPersonAcknowledgement: a second-person token occurs.
/// ConciseFactual: at most concise_max_words words and fact-oriented yes.
/// AssuranceWords: an assurance token occurs.
bool check_match(const Directive& directive, std::string_view reply, const ModelBundle& bundle,
                 const Lexicons& lexicons, const MatchConfig& config = {});

// --- conversations ------------------------------------------------------------------------------

enum class Speaker { User, Agent };
enum class Satisfaction { Satisfied, Neutral, Dissatisfied, Unset };

std::string_view to_string(Speaker s);
std::string_view to_string(Satisfaction s);
std::optional<Satisfaction> parse_satisfaction(std::string_view s);
/// Dissatisfied 0, Neutral 1, Satisfied 2.
int ordinal(Satisfaction s);

struct Turn {
    Speaker speaker = Speaker::User;
    std::string text;
};

struct Conversation {
    std::string id;
    std::vector<Turn> turns;
    Satisfaction satisfaction = Satisfaction::Unset;
};

/// Schema violation with a JSON pointer to the offending value.
class SchemaError : public Error {
public:
    SchemaError(std::string pointer, const std::string& message)
        : Error(ErrorCode::Schema, message), pointer_(std::move(pointer)) {}
    const std::string& pointer() const { return pointer_; }

private:
    std::string pointer_;
};

/// `{"id": str, "turns": [{"speaker": "user"|"agent", "text": str}],
/// "satisfaction": str|null}`. Throws SchemaError.
Conversation parse_conversation(const nlohmann::json& j);
nlohmann::json conversation_to_json(const Conversation& c);
std::vector<Conversation> parse_conversations_jsonl(std::string_view content);

struct MatchVerdict {
    Directive directive;
    bool matched = false;
};

struct TurnAnalysis {
    std::size_t index = 0;
    Speaker speaker = Speaker::User;
    std::optional<Profile> profile;         // user turns
    std::vector<Directive> directives;      // user turns
    std::optional<std::size_t> replies_to;  // agent turns checked against a user turn
    std::vector<MatchVerdict> verdicts;     // agent turns
};

struct MatchingReport {
    std::size_t detected = 0;
    std::size_t matched = 0;
    /// 100 * matched / detected; null when detected == 0.
    std::optional<double> matching_level;
    std::vector<std::string> warnings;
};

struct ConversationAnalysis {
    std::string id;
    std::vector<TurnAnalysis> turns;
    MatchingReport report;
    Satisfaction satisfaction = Satisfaction::Unset;
};

/// Each user turn's directives are checked against the agent turn right
/// after it; further agent turns are not checked, leading agent turns are
/// ignored, and a user turn with no agent reply is excluded with a warning.
ConversationAnalysis analyze(const Conversation& conversation, const ModelBundle& bundle,
                             const Lexicons& lexicons, const MatchConfig& config = {});

MatchingReport matching_level(const Conversation& conversation, const ModelBundle& bundle,
                              const Lexicons& lexicons, const MatchConfig& config = {});

/// Looks at the final user turn only: gratitude token -> Satisfied;
/// emotional with an anger token -> Dissatisfied; otherwise Neutral. Unset
/// when there is no user turn.
Satisfaction satisfaction_heuristic(const Conversation& conversation, const ModelBundle& bundle,
                                    const Lexicons& lexicons);

nlohmann::json profile_to_json(const Profile& p);
nlohmann::json directive_to_json(const Directive& d);
nlohmann::json analysis_to_json(const ConversationAnalysis& a);

// --- association ------------------------------------------------------------------------------------

struct AssociationInput {
    std::optional<double> matching_level;
    Satisfaction satisfaction = Satisfaction::Unset;
};

struct Association {
    std::size_t n = 0;
    /// Spearman correlation on average ranks; null when either side is constant.
    std::optional<double> spearman;
    /// Upper bounds of the first two matching-level terciles.
    std::array<double, 2> tercile_cutoffs{};
    /// counts[satisfaction ordinal][tercile]
    std::array<std::array<std::size_t, 3>, 3> contingency{};
};

/// Ranks 1..n with ties sharing their average rank.
std::vector<double> average_ranks(std::span<const double> values);
std::optional<double> spearman(std::span<const double> x, std::span<const double> y);

/// Pairs with a null matching level or Unset satisfaction are skipped.
/// Throws InvalidArgument with fewer than 5 usable pairs.
Association association(std::span<const AssociationInput> batch);

nlohmann::json association_to_json(const Association& a);

}  // namespace styleprof::adapt
