#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "styleprof/corpus.hpp"

namespace styleprof::agreement {

/// Strict majority of an odd-length vote list. Throws Resolution on even
/// length (including empty).
bool majority_vote(const std::vector<bool>& votes);

/// Difficult iff at least two annotators voted difficult.
corpus::Difficulty difficulty_of(const std::vector<bool>& difficulty_votes);

bool is_unanimous(const std::vector<bool>& votes);

/// Perfect-agreement rates per characteristic (percent of instances with
/// unanimous votes), over records with at least two annotators.
struct AgreementReport {
    PerCharacteristic<std::optional<double>> perfect_agreement_rate;  // null when n_instances == 0
    std::size_t n_instances = 0;
    /// Records excluded for having fewer than two annotators.
    std::size_t n_excluded = 0;
    PerCharacteristic<std::vector<std::string>> disagreement_ids;  // sorted
    /// Fleiss' kappa, an extra chance-corrected statistic; null when undefined.
    PerCharacteristic<std::optional<double>> fleiss_kappa;
};

AgreementReport perfect_agreement(const corpus::Corpus& corpus);

struct DisagreementEntry {
    std::string utterance_id;
    std::string text;
    std::vector<bool> votes;
};

/// Non-unanimous records for `c`, sorted by id. Records with fewer than two
/// votes are skipped.
std::vector<DisagreementEntry> disagreement_report(const corpus::Corpus& corpus, Characteristic c);

std::optional<double> fleiss_kappa(const corpus::Corpus& corpus, Characteristic c);

std::string report_to_json(const AgreementReport& report, int indent = 2);
std::string report_to_text(const AgreementReport& report);

}  // namespace styleprof::agreement
