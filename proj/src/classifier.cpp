#include "evacnet/classifier.hpp"

#include <algorithm>
#include <cmath>

#include "evacnet/error.hpp"

namespace evacnet {

namespace {

std::string ascii_lower(std::string_view s) {
    std::string out(s);
    for (char& c : out)
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    return out;
}

std::vector<std::string_view> split_sentences(std::string_view text) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= text.size(); ++i) {
        if (i == text.size() || text[i] == '.' || text[i] == '!' || text[i] == '?' || text[i] == '\n') {
            if (i > start) out.push_back(text.substr(start, i - start));
            start = i + 1;
        }
    }
    return out;
}

std::size_t count_occurrences(std::string_view haystack, std::string_view needle) {
    if (needle.empty()) return 0;
    std::size_t n = 0;
    for (auto pos = haystack.find(needle); pos != std::string_view::npos; pos = haystack.find(needle, pos + needle.size()))
        ++n;
    return n;
}

bool contains_any(std::string_view haystack, const std::vector<std::string>& needles) {
    return std::any_of(needles.begin(), needles.end(),
                       [&](const std::string& n) { return !n.empty() && haystack.find(n) != std::string_view::npos; });
}

}  // namespace

std::string_view to_string(NoticeLabel label) {
    switch (label) {
        case NoticeLabel::Mandatory: return "Mandatory";
        case NoticeLabel::Voluntary: return "Voluntary";
        case NoticeLabel::NotNotice: return "NotNotice";
    }
    return "NotNotice";
}

std::optional<NoticeLabel> parse_notice_label(std::string_view text) {
    const std::string t = ascii_lower(text);
    if (t == "mandatory") return NoticeLabel::Mandatory;
    if (t == "voluntary") return NoticeLabel::Voluntary;
    if (t == "notnotice" || t == "not_notice" || t == "not") return NoticeLabel::NotNotice;
    return std::nullopt;
}

std::string_view to_string(BinaryLabel label) {
    return label == BinaryLabel::Notice ? "Notice" : "NotNotice";
}

bool LabelDistribution::valid(double m, double v, double n) {
    for (double p : {m, v, n})
        if (!std::isfinite(p) || p < 0.0 || p > 1.0 + kDistributionTolerance) return false;
    return std::abs(m + v + n - 1.0) <= kDistributionTolerance;
}

LabelDistribution LabelDistribution::from(double m, double v, double n) {
    if (!valid(m, v, n))
        throw Error(ErrorCode::InvalidDistribution,
                    "(" + std::to_string(m) + ", " + std::to_string(v) + ", " + std::to_string(n) + ")");
    return LabelDistribution({m, v, n});
}

double LabelDistribution::max_component() const noexcept { return *std::max_element(p_.begin(), p_.end()); }

BinaryDistribution BinaryDistribution::from(double notice, double not_notice) {
    for (double p : {notice, not_notice})
        if (!std::isfinite(p) || p < 0.0 || p > 1.0 + kDistributionTolerance)
            throw Error(ErrorCode::InvalidDistribution, "binary component out of range");
    if (std::abs(notice + not_notice - 1.0) > kDistributionTolerance)
        throw Error(ErrorCode::InvalidDistribution, "binary distribution does not sum to 1");
    return {notice, not_notice};
}

NoticeLabel decide(const LabelDistribution& dist) {
    // kNoticeLabels is already in tie-break priority order; strict > keeps the earlier one.
    NoticeLabel best = NoticeLabel::Mandatory;
    for (auto label : kNoticeLabels)
        if (dist[label] > dist[best]) best = label;
    return best;
}

BinaryLabel decide(const BinaryDistribution& dist) {
    return dist.not_notice > dist.notice ? BinaryLabel::NotNotice : BinaryLabel::Notice;
}

BinaryDistribution to_binary(const LabelDistribution& dist) {
    return {dist.mandatory() + dist.voluntary(), dist.not_notice()};
}

const LexicalConfig& default_lexical_config() {
    static const LexicalConfig config;
    return config;
}

LabelDistribution lexical_classify(std::string_view text, const LexicalConfig& config) {
    auto lowered = [](const std::vector<std::string>& v) {
        std::vector<std::string> out;
        for (const auto& s : v) out.push_back(ascii_lower(s));
        return out;
    };
    const auto m_cues = lowered(config.mandatory_cues);
    const auto v_cues = lowered(config.voluntary_cues);
    const auto dampers = lowered(config.dampers);

    const std::string lower_text = ascii_lower(text);
    std::size_t m = 0;
    std::size_t v = 0;
    for (auto sentence : split_sentences(lower_text)) {
        if (contains_any(sentence, dampers)) continue;
        for (const auto& cue : m_cues) m += count_occurrences(sentence, cue);
        for (const auto& cue : v_cues) v += count_occurrences(sentence, cue);
    }
    const double sm = 2.0 * static_cast<double>(m);
    const double sv = static_cast<double>(v);
    const double sn = (m + v == 0) ? 1.0 : 0.0;
    const double total = sm + sv + sn;
    return LabelDistribution::from(sm / total, sv / total, sn / total);
}

std::vector<BinaryDistribution> Classifier::classify_binary(std::span<const std::string> texts) {
    std::vector<BinaryDistribution> out;
    for (const auto& d : classify(texts)) out.push_back(to_binary(d));
    return out;
}

std::vector<LabelDistribution> LexicalClassifier::classify(std::span<const std::string> texts) {
    std::vector<LabelDistribution> out;
    out.reserve(texts.size());
    for (const auto& t : texts) out.push_back(lexical_classify(t, config_));
    return out;
}

}  // namespace evacnet
