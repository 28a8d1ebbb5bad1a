#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace evacnet {

enum class NoticeLabel { Mandatory, Voluntary, NotNotice };

inline constexpr std::array<NoticeLabel, 3> kNoticeLabels = {NoticeLabel::Mandatory, NoticeLabel::Voluntary,
                                                             NoticeLabel::NotNotice};

std::string_view to_string(NoticeLabel label);
/// Case-insensitive; accepts `Mandatory`, `Voluntary`, `NotNotice`, `not_notice`, `not`.
std::optional<NoticeLabel> parse_notice_label(std::string_view text);

enum class BinaryLabel { Notice, NotNotice };

std::string_view to_string(BinaryLabel label);
inline BinaryLabel collapse(NoticeLabel label) {
    return label == NoticeLabel::NotNotice ? BinaryLabel::NotNotice : BinaryLabel::Notice;
}

inline constexpr double kDistributionTolerance = 1e-6;

/// Three-class probability vector ordered (Mandatory, Voluntary, NotNotice).
/// Construction validates: components non-negative, sum within 1e-6 of 1.
class LabelDistribution {
public:
    /// Throws Error(InvalidDistribution).
    static LabelDistribution from(double mandatory, double voluntary, double not_notice);
    static bool valid(double mandatory, double voluntary, double not_notice);

    double mandatory() const noexcept { return p_[0]; }
    double voluntary() const noexcept { return p_[1]; }
    double not_notice() const noexcept { return p_[2]; }
    double operator[](NoticeLabel label) const noexcept { return p_[static_cast<std::size_t>(label)]; }
    const std::array<double, 3>& values() const noexcept { return p_; }
    double max_component() const noexcept;

    bool operator==(const LabelDistribution&) const = default;

private:
    explicit LabelDistribution(std::array<double, 3> p) : p_(p) {}
    std::array<double, 3> p_;
};

struct BinaryDistribution {
    double notice = 0.0;
    double not_notice = 0.0;

    /// Throws Error(InvalidDistribution).
    static BinaryDistribution from(double notice, double not_notice);
    bool operator==(const BinaryDistribution&) const = default;
};

/// Argmax with exact ties broken Mandatory > Voluntary > NotNotice.
NoticeLabel decide(const LabelDistribution& dist);
/// Argmax with exact ties broken Notice > NotNotice.
BinaryLabel decide(const BinaryDistribution& dist);
BinaryDistribution to_binary(const LabelDistribution& dist);

/// Cue phrases and dampers for the lexical baseline. Matching is
/// case-insensitive substring search within one sentence.
struct LexicalConfig {
    std::vector<std::string> mandatory_cues{"mandatory evacuation", "evacuation order", "ordered to evacuate",
                                            "must evacuate"};
    std::vector<std::string> voluntary_cues{"voluntary evacuation", "voluntarily evacuate", "encouraged to evacuate",
                                            "advised to evacuate", "evacuation recommended"};
    std::vector<std::string> dampers{"will be issued", "may be issued", "lifted", "rescinded"};
};

const LexicalConfig& default_lexical_config();

/// Deterministic cue-counting baseline. Sentences split on `.`, `!`, `?` and
/// newline; a cue in a sentence that also holds a damper counts zero. Scores
/// (2m, v, [m+v==0]) normalized to sum 1.
LabelDistribution lexical_classify(std::string_view normalized_text,
                                   const LexicalConfig& config = default_lexical_config());

/// Backend contract: one distribution per input, order preserved.
class Classifier {
public:
    virtual ~Classifier() = default;
    virtual std::vector<LabelDistribution> classify(std::span<const std::string> texts) = 0;
    /// Two-class view; backends trained on the binary task override this.
    virtual std::vector<BinaryDistribution> classify_binary(std::span<const std::string> texts);
};

class LexicalClassifier final : public Classifier {
public:
    explicit LexicalClassifier(LexicalConfig config = default_lexical_config()) : config_(std::move(config)) {}
    std::vector<LabelDistribution> classify(std::span<const std::string> texts) override;

private:
    LexicalConfig config_;
};

}  // namespace evacnet
