#pragma once

#include <array>
#include <bitset>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace newsrisk {

/// The seven company risk factors, in canonical order.
enum class RiskFactor : std::size_t {
  SupplyChainAndProduct = 0,
  PeopleAndManagement,
  Finance,
  LegalAndRegulations,
  Macro,
  Competition,
  MarketsAndConsumers,
};

inline constexpr std::size_t kNumFactors = 7;

inline constexpr std::array<RiskFactor, kNumFactors> kAllFactors = {
    RiskFactor::SupplyChainAndProduct, RiskFactor::PeopleAndManagement,
    RiskFactor::Finance,               RiskFactor::LegalAndRegulations,
    RiskFactor::Macro,                 RiskFactor::Competition,
    RiskFactor::MarketsAndConsumers,
};

constexpr std::size_t index_of(RiskFactor f) { return static_cast<std::size_t>(f); }

/// Display name, e.g. "Supply Chain and Product".
std::string_view display_name(RiskFactor f);
/// Short column label, e.g. "Supp".
std::string_view short_name(RiskFactor f);
/// Stable machine code used in every file and wire format, e.g. "supply_chain_and_product".
std::string_view code(RiskFactor f);
/// Risk description substituted into classification prompts.
std::string_view description(RiskFactor f);

/// Accepts the machine code, the short name or the enum spelling, case-insensitively.
std::optional<RiskFactor> parse_factor(std::string_view text);

/// Seven independent binary flags. All-false is the valid "no risk" state.
class RiskLabelSet {
 public:
  RiskLabelSet() = default;
  RiskLabelSet(std::initializer_list<RiskFactor> positives) {
    for (auto f : positives) set(f);
  }

  bool operator[](RiskFactor f) const { return bits_[index_of(f)]; }
  bool test(std::size_t i) const { return bits_[i]; }
  void set(RiskFactor f, bool value = true) { bits_[index_of(f)] = value; }
  void set(std::size_t i, bool value) { bits_[i] = value; }

  std::size_t count() const { return bits_.count(); }
  bool none() const { return bits_.none(); }

  /// Positive factor codes in canonical order.
  std::vector<std::string> codes() const;
  /// Inverse of codes(); throws ParseError on an unknown code.
  static RiskLabelSet from_codes(const std::vector<std::string>& codes);

  /// "0100100"-style string, canonical order.
  std::string to_bitstring() const;
  static RiskLabelSet from_bitstring(std::string_view bits);

  friend bool operator==(const RiskLabelSet&, const RiskLabelSet&) = default;

 private:
  std::bitset<kNumFactors> bits_;
};

}  // namespace newsrisk
