#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "newsrisk/dataset.hpp"
#include "newsrisk/endpoint.hpp"
#include "newsrisk/risk_factor.hpp"
#include "newsrisk/vectorizer.hpp"

namespace newsrisk {

/// Number of nearest-neighbor demonstrations in few-shot mode.
inline constexpr std::size_t kDefaultFewShotK = 3;

inline constexpr std::string_view kOptionsLine = "Options: Yes, No";
inline constexpr std::string_view kAnswerLine = "Your answer is (Please only use Yes or No):";

enum class Answer { Yes, No, Unparseable };

std::string_view answer_text(Answer a);

struct FewShotExample {
  std::string news_text;
  std::string target;
  bool answer = false;
};

struct PromptSpec {
  std::string news_text;
  std::string target;
  std::string risk_description;
  /// Demonstrations in neighbor order; empty in zero-shot mode.
  std::vector<FewShotExample> fewshot;
};

/// The four-line question block for one (text, target, risk):
///   {news text}
///   For company {target}, does the above news mention {risk} ?
///   Options: Yes, No
///   Your answer is (Please only use Yes or No):
std::string question_block(std::string_view news_text, std::string_view target, std::string_view risk);

/// Demonstration blocks (question block + " Yes"/" No") followed by the test
/// question block, separated by one blank line. No trailing newline.
/// Throws PromptError when a text, target or risk field is empty.
std::string build_prompt(const PromptSpec& spec);

/// First alphabetic token, case-folded: "yes" -> Yes, "no" -> No, otherwise Unparseable.
Answer parse_answer(std::string_view raw_text);

struct LlmAnswer {
  std::string raw_text;
  Answer parsed = Answer::Unparseable;
};

/// Nearest training samples by cosine similarity of TF-IDF vectors fitted on
/// the training texts. Ties are ordered by sample_id.
class FewShotSelector {
 public:
  struct Neighbor {
    std::size_t index;  // into samples()
    double similarity;
  };

  /// Throws ValidationError on an empty training set.
  explicit FewShotSelector(std::vector<LabeledSample> train, std::size_t min_df = 1);

  /// Throws PreconditionError when fewer than k training samples exist.
  std::vector<Neighbor> select(const Sample& query, std::size_t k = kDefaultFewShotK) const;

  const std::vector<LabeledSample>& samples() const { return train_; }
  const Vectorizer& vectorizer() const { return vectorizer_; }

 private:
  std::vector<LabeledSample> train_;
  Vectorizer vectorizer_;
  std::vector<SparseVector> vectors_;
};

enum class PromptMode { ZeroShot, FewShot };

PromptMode parse_prompt_mode(std::string_view name);

/// The prompt sent for one factor of one sample.
std::string factor_prompt(const Sample& sample, RiskFactor factor, PromptMode mode,
                          const FewShotSelector* selector, std::size_t k = kDefaultFewShotK);

struct LlmClassification {
  RiskLabelSet labels;
  std::array<std::optional<LlmAnswer>, kNumFactors> answers;
  /// Non-empty where the request for that factor failed.
  std::array<std::string, kNumFactors> errors;
  std::size_t unparseable = 0;
  std::size_t requests = 0;

  bool complete() const {
    for (const auto& e : errors) {
      if (!e.empty()) return false;
    }
    return true;
  }
};

/// One generation request per factor. Yes -> positive; No and Unparseable ->
/// negative, with Unparseable counted. A failed request marks only its own
/// factor (negative, error recorded).
LlmClassification classify_with_llm(GenerationClient& client, const Sample& sample, PromptMode mode,
                                    const FewShotSelector* selector = nullptr,
                                    std::size_t k = kDefaultFewShotK);

}  // namespace newsrisk
