#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

namespace hikester::store {

using DocumentValue = nlohmann::json;

/// Field addressed by a dotted path inside a document, e.g. "location.lat".
struct FieldEquals {
  std::string field;
  DocumentValue value;
};

/// The map at `field` contains `key` with a value other than null/false.
/// Sets are stored as key -> true maps, so this is set membership.
struct HasKey {
  std::string field;
  std::string key;
};

/// Numeric field within [min, max]; either bound may be open.
struct InRange {
  std::string field;
  std::optional<double> min;
  std::optional<double> max;
};

using Clause = std::variant<FieldEquals, HasKey, InRange>;

/// Conjunction of clauses. An empty filter matches every document.
class Filter {
 public:
  Filter() = default;
  explicit Filter(std::vector<Clause> clauses) : clauses_(std::move(clauses)) {}

  Filter& equals(std::string field, DocumentValue value);
  Filter& has_key(std::string field, std::string key);
  Filter& in_range(std::string field, std::optional<double> min, std::optional<double> max);

  bool matches(const DocumentValue& doc) const;
  bool empty() const { return clauses_.empty(); }
  const std::vector<Clause>& clauses() const { return clauses_; }

  /// {"all": [{"eq": {field, value}} | {"has": {field, key}} | {"range": {field, min, max}}]}
  DocumentValue to_json() const;
  static Filter from_json(const DocumentValue& j);

 private:
  std::vector<Clause> clauses_;
};

/// Resolves a dotted field path; nullptr when any step is missing.
const DocumentValue* find_field(const DocumentValue& doc, const std::string& dotted);

}  // namespace hikester::store
