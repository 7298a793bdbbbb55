#include "newsrisk/risk_factor.hpp"

#include <algorithm>
#include <cctype>

#include "newsrisk/errors.hpp"

namespace newsrisk {

namespace {

struct FactorInfo {
  std::string_view display;
  std::string_view short_label;
  std::string_view code;
  std::string_view enum_name;
  std::string_view description;
};

// Descriptions are the taxonomy definitions, trailing period removed so they
// read inside the question line of the prompt.
constexpr std::array<FactorInfo, kNumFactors> kInfo = {{
    {"Supply Chain and Product", "Supp", "supply_chain_and_product", "SupplyChainAndProduct",
     "Risks associated with the company's supply chain, manufacturing, product or core technology"},
    {"People and Management", "Mgmt", "people_and_management", "PeopleAndManagement",
     "Risks regarding a company's internal operations such as layoffs, departures of top "
     "management, or specific operation strategies"},
    {"Finance", "Fin", "finance", "Finance",
     "Risks related to the finances of a company such as cash flow, fund procurement, "
     "investments, and profits"},
    {"Legal and Regulations", "Legal", "legal_and_regulations", "LegalAndRegulations",
     "Risks induced by potential policy changes, pressure from regulations or lawsuits"},
    {"Macro", "Macro", "macro", "Macro",
     "Risks caused by the macro socio-economic environment such as inflation, pandemics or a "
     "financial crisis"},
    {"Competition", "Comp", "competition", "Competition",
     "Risks from a company's competitors in the market"},
    {"Markets and Consumers", "Mrkt", "markets_and_consumers", "MarketsAndConsumers",
     "Risks or challenges from the market or consumer sales"},
}};

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() &&
         std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::tolower(static_cast<unsigned char>(x)) ==
                  std::tolower(static_cast<unsigned char>(y));
         });
}

}  // namespace

std::string_view display_name(RiskFactor f) { return kInfo[index_of(f)].display; }
std::string_view short_name(RiskFactor f) { return kInfo[index_of(f)].short_label; }
std::string_view code(RiskFactor f) { return kInfo[index_of(f)].code; }
std::string_view description(RiskFactor f) { return kInfo[index_of(f)].description; }

std::optional<RiskFactor> parse_factor(std::string_view text) {
  for (auto f : kAllFactors) {
    const auto& info = kInfo[index_of(f)];
    if (iequals(text, info.code) || iequals(text, info.short_label) ||
        iequals(text, info.enum_name) || iequals(text, info.display)) {
      return f;
    }
  }
  return std::nullopt;
}

std::vector<std::string> RiskLabelSet::codes() const {
  std::vector<std::string> out;
  for (auto f : kAllFactors) {
    if ((*this)[f]) out.emplace_back(code(f));
  }
  return out;
}

RiskLabelSet RiskLabelSet::from_codes(const std::vector<std::string>& codes) {
  RiskLabelSet set;
  for (const auto& c : codes) {
    auto f = parse_factor(c);
    if (!f) throw ParseError("unknown risk factor '" + c + "'");
    set.set(*f);
  }
  return set;
}

std::string RiskLabelSet::to_bitstring() const {
  std::string s(kNumFactors, '0');
  for (std::size_t i = 0; i < kNumFactors; ++i) {
    if (bits_[i]) s[i] = '1';
  }
  return s;
}

RiskLabelSet RiskLabelSet::from_bitstring(std::string_view bits) {
  if (bits.size() != kNumFactors) throw ParseError("label bitstring must have 7 digits");
  RiskLabelSet set;
  for (std::size_t i = 0; i < kNumFactors; ++i) {
    if (bits[i] == '1') {
      set.set(i, true);
    } else if (bits[i] != '0') {
      throw ParseError("label bitstring must contain only 0/1");
    }
  }
  return set;
}

}  // namespace newsrisk
