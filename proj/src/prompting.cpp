#include "newsrisk/prompting.hpp"

#include <algorithm>
#include <future>

#include "newsrisk/corpus.hpp"
#include "newsrisk/errors.hpp"

namespace newsrisk {

std::string_view answer_text(Answer a) {
  switch (a) {
    case Answer::Yes:
      return "Yes";
    case Answer::No:
      return "No";
    case Answer::Unparseable:
      return "Unparseable";
  }
  return "Unparseable";
}

std::string question_block(std::string_view news_text, std::string_view target, std::string_view risk) {
  std::string out;
  out.reserve(news_text.size() + target.size() + risk.size() + 128);
  out.append(news_text).append("\n");
  out.append("For company ").append(target).append(", does the above news mention ").append(risk).append(" ?\n");
  out.append(kOptionsLine).append("\n");
  out.append(kAnswerLine);
  return out;
}

std::string build_prompt(const PromptSpec& spec) {
  auto require = [](const std::string& value, const char* field) {
    if (value.empty()) throw PromptError(std::string("prompt field '") + field + "' is empty");
  };
  require(spec.news_text, "news_text");
  require(spec.target, "target");
  require(spec.risk_description, "risk_description");

  std::string out;
  for (const auto& ex : spec.fewshot) {
    require(ex.news_text, "fewshot.news_text");
    require(ex.target, "fewshot.target");
    out += question_block(ex.news_text, ex.target, spec.risk_description);
    out += ex.answer ? " Yes" : " No";
    out += "\n\n";
  }
  out += question_block(spec.news_text, spec.target, spec.risk_description);
  return out;
}

Answer parse_answer(std::string_view raw_text) {
  auto is_alpha = [](char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); };
  std::size_t i = 0;
  while (i < raw_text.size() && !is_alpha(raw_text[i])) ++i;
  std::string token;
  while (i < raw_text.size() && is_alpha(raw_text[i])) {
    const char c = raw_text[i++];
    token.push_back(c >= 'A' && c <= 'Z' ? static_cast<char>(c - 'A' + 'a') : c);
  }
  if (token == "yes") return Answer::Yes;
  if (token == "no") return Answer::No;
  return Answer::Unparseable;
}

FewShotSelector::FewShotSelector(std::vector<LabeledSample> train, std::size_t min_df) : train_(std::move(train)) {
  if (train_.empty()) throw ValidationError("few-shot selection needs a non-empty training set");
  std::vector<TokenList> docs;
  docs.reserve(train_.size());
  for (const auto& s : train_) docs.push_back(tokenize(s.sample.truncated_text));
  vectorizer_ = Vectorizer::fit(docs, min_df);
  vectors_.reserve(docs.size());
  for (const auto& d : docs) vectors_.push_back(vectorizer_.transform(d));
}

std::vector<FewShotSelector::Neighbor> FewShotSelector::select(const Sample& query, std::size_t k) const {
  if (train_.size() < k) {
    throw PreconditionError("few-shot selection needs at least " + std::to_string(k) + " training samples, have " +
                            std::to_string(train_.size()));
  }
  const SparseVector q = vectorizer_.transform_text(query.truncated_text);
  std::vector<Neighbor> all;
  all.reserve(train_.size());
  for (std::size_t i = 0; i < vectors_.size(); ++i) all.push_back({i, sparse_dot(q, vectors_[i])});
  auto before = [&](const Neighbor& a, const Neighbor& b) {
    if (a.similarity != b.similarity) return a.similarity > b.similarity;
    return train_[a.index].sample.sample_id < train_[b.index].sample.sample_id;
  };
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k), all.end(), before);
  all.resize(k);
  return all;
}

PromptMode parse_prompt_mode(std::string_view name) {
  if (name == "zero") return PromptMode::ZeroShot;
  if (name == "few") return PromptMode::FewShot;
  throw ValidationError("mode must be 'zero' or 'few', got '" + std::string(name) + "'");
}

std::string factor_prompt(const Sample& sample, RiskFactor factor, PromptMode mode,
                          const FewShotSelector* selector, std::size_t k) {
  PromptSpec spec{sample.truncated_text, sample.company_name, std::string(description(factor)), {}};
  if (mode == PromptMode::FewShot) {
    if (!selector) throw PreconditionError("few-shot mode needs training samples");
    for (const auto& n : selector->select(sample, k)) {
      const auto& ex = selector->samples()[n.index];
      spec.fewshot.push_back({ex.sample.truncated_text, ex.sample.company_name, ex.labels[factor]});
    }
  }
  return build_prompt(spec);
}

LlmClassification classify_with_llm(GenerationClient& client, const Sample& sample, PromptMode mode,
                                    const FewShotSelector* selector, std::size_t k) {
  if (mode == PromptMode::FewShot && !selector) throw PreconditionError("few-shot mode needs training samples");

  // Neighbor selection is shared by all seven prompts.
  std::vector<const LabeledSample*> neighbors;
  if (mode == PromptMode::FewShot) {
    for (const auto& n : selector->select(sample, k)) neighbors.push_back(&selector->samples()[n.index]);
  }
  std::array<std::string, kNumFactors> prompts;
  for (auto f : kAllFactors) {
    PromptSpec spec{sample.truncated_text, sample.company_name, std::string(description(f)), {}};
    for (const auto* ex : neighbors) {
      spec.fewshot.push_back({ex->sample.truncated_text, ex->sample.company_name, ex->labels[f]});
    }
    prompts[index_of(f)] = build_prompt(spec);
  }

  LlmClassification out;
  auto record = [&](std::size_t f, const std::string& text) {
    LlmAnswer answer{text, parse_answer(text)};
    out.labels.set(f, answer.parsed == Answer::Yes);
    if (answer.parsed == Answer::Unparseable) ++out.unparseable;
    out.answers[f] = std::move(answer);
  };

  if (client.max_in_flight() <= 1) {
    for (std::size_t f = 0; f < kNumFactors; ++f) {
      ++out.requests;
      try {
        record(f, client.generate(prompts[f]));
      } catch (const Error& e) {
        out.errors[f] = e.what();
      }
    }
    return out;
  }

  std::array<std::future<std::string>, kNumFactors> pending;
  for (std::size_t f = 0; f < kNumFactors; ++f) {
    pending[f] = std::async(std::launch::async, [&client, &prompts, f] { return client.generate(prompts[f]); });
    ++out.requests;
  }
  for (std::size_t f = 0; f < kNumFactors; ++f) {
    try {
      record(f, pending[f].get());
    } catch (const Error& e) {
      out.errors[f] = e.what();
    }
  }
  return out;
}

}  // namespace newsrisk
