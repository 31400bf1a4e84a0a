#include "styleprof/agreement.hpp"

#include <algorithm>
#include <cstdio>
#include <nlohmann/json.hpp>
#include <sstream>

#include "styleprof/error.hpp"

namespace styleprof::agreement {

using corpus::Difficulty;

bool majority_vote(const std::vector<bool>& votes) {
    if (votes.size() % 2 == 0) {
        throw Error(ErrorCode::Resolution,
                    "majority vote needs an odd number of votes, got " +
                        std::to_string(votes.size()));
    }
    const auto yes = static_cast<std::size_t>(std::count(votes.begin(), votes.end(), true));
    return 2 * yes > votes.size();
}

Difficulty difficulty_of(const std::vector<bool>& difficulty_votes) {
    const auto n = std::count(difficulty_votes.begin(), difficulty_votes.end(), true);
    return n >= 2 ? Difficulty::Difficult : Difficulty::Easy;
}

bool is_unanimous(const std::vector<bool>& votes) {
    if (votes.empty()) return false;
    return std::all_of(votes.begin(), votes.end(), [&](bool v) { return v == votes.front(); });
}

std::optional<double> fleiss_kappa(const corpus::Corpus& corpus, Characteristic c) {
    // Generalised to per-item rater counts; items with < 2 raters are skipped.
    double sum_p_i = 0.0;
    double total_yes = 0.0, total_votes = 0.0;
    std::size_t items = 0;
    for (const auto& r : corpus.records()) {
        const auto& v = r.annotation.votes[c];
        const auto n = static_cast<double>(v.size());
        if (v.size() < 2) continue;
        const auto yes = static_cast<double>(std::count(v.begin(), v.end(), true));
        const double no = n - yes;
        sum_p_i += (yes * yes + no * no - n) / (n * (n - 1.0));
        total_yes += yes;
        total_votes += n;
        ++items;
    }
    if (items == 0) return std::nullopt;
    const double p_bar = sum_p_i / static_cast<double>(items);
    const double p_yes = total_yes / total_votes;
    const double p_e = p_yes * p_yes + (1.0 - p_yes) * (1.0 - p_yes);
    if (p_e >= 1.0) return std::nullopt;
    return (p_bar - p_e) / (1.0 - p_e);
}

AgreementReport perfect_agreement(const corpus::Corpus& corpus) {
    AgreementReport report;
    PerCharacteristic<std::size_t> unanimous{};
    for (const auto& r : corpus.records()) {
        if (r.annotation.annotator_count() < 2) {
            ++report.n_excluded;
            continue;
        }
        ++report.n_instances;
        for (auto c : kAllCharacteristics) {
            if (is_unanimous(r.annotation.votes[c])) {
                ++unanimous[c];
            } else {
                report.disagreement_ids[c].push_back(r.id());
            }
        }
    }
    for (auto c : kAllCharacteristics) {
        std::sort(report.disagreement_ids[c].begin(), report.disagreement_ids[c].end());
        if (report.n_instances > 0) {
            report.perfect_agreement_rate[c] = 100.0 * static_cast<double>(unanimous[c]) /
                                               static_cast<double>(report.n_instances);
        }
        report.fleiss_kappa[c] = fleiss_kappa(corpus, c);
    }
    return report;
}

std::vector<DisagreementEntry> disagreement_report(const corpus::Corpus& corpus,
                                                   Characteristic c) {
    std::vector<DisagreementEntry> out;
    for (const auto& r : corpus.records()) {
        const auto& v = r.annotation.votes[c];
        if (v.size() < 2 || is_unanimous(v)) continue;
        out.push_back(DisagreementEntry{r.id(), r.utterance.text, v});
    }
    std::sort(out.begin(), out.end(),
              [](const auto& a, const auto& b) { return a.utterance_id < b.utterance_id; });
    return out;
}

std::string report_to_json(const AgreementReport& report, int indent) {
    nlohmann::ordered_json j;
    j["n_instances"] = report.n_instances;
    j["n_excluded"] = report.n_excluded;
    nlohmann::ordered_json rates = nlohmann::ordered_json::object();
    nlohmann::ordered_json kappa = nlohmann::ordered_json::object();
    nlohmann::ordered_json ids = nlohmann::ordered_json::object();
    for (auto c : kAllCharacteristics) {
        const std::string key(wire_name(c));
        const auto& rate = report.perfect_agreement_rate[c];
        rates[key] = rate ? nlohmann::ordered_json(*rate) : nlohmann::ordered_json(nullptr);
        const auto& k = report.fleiss_kappa[c];
        kappa[key] = k ? nlohmann::ordered_json(*k) : nlohmann::ordered_json(nullptr);
        ids[key] = report.disagreement_ids[c];
    }
    j["perfect_agreement_rate"] = std::move(rates);
    j["fleiss_kappa_supplementary"] = std::move(kappa);
    j["disagreement_ids"] = std::move(ids);
    return j.dump(indent);
}

std::string report_to_text(const AgreementReport& report) {
    std::ostringstream out;
    char line[128];
    std::snprintf(line, sizeof line, "%-20s %17s %13s %14s\n", "Aspect", "Perfect agreement",
                  "Disagreements", "Fleiss kappa*");
    out << line;
    for (auto c : kAllCharacteristics) {
        const auto& rate = report.perfect_agreement_rate[c];
        const auto& k = report.fleiss_kappa[c];
        char rate_s[32], kappa_s[32];
        if (rate) {
            std::snprintf(rate_s, sizeof rate_s, "%.1f%%", *rate);
        } else {
            std::snprintf(rate_s, sizeof rate_s, "n/a");
        }
        if (k) {
            std::snprintf(kappa_s, sizeof kappa_s, "%.3f", *k);
        } else {
            std::snprintf(kappa_s, sizeof kappa_s, "n/a");
        }
        std::snprintf(line, sizeof line, "%-20s %17s %13zu %14s\n",
                      std::string(display_name(c)).c_str(), rate_s,
                      report.disagreement_ids[c].size(), kappa_s);
        out << line;
    }
    out << "instances: " << report.n_instances << " (excluded with <2 annotators: "
        << report.n_excluded << ")\n";
    out << "* chance-corrected, supplementary statistic\n";
    return out.str();
}

}  // namespace styleprof::agreement
