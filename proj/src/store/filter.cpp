#include "hikester/store/filter.hpp"

#include <stdexcept>

namespace hikester::store {

const DocumentValue* find_field(const DocumentValue& doc, const std::string& dotted) {
  const DocumentValue* node = &doc;
  std::size_t start = 0;
  while (start <= dotted.size()) {
    auto dot = dotted.find('.', start);
    auto key = dotted.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (!node->is_object()) return nullptr;
    auto it = node->find(key);
    if (it == node->end()) return nullptr;
    node = &*it;
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  return node;
}

Filter& Filter::equals(std::string field, DocumentValue value) {
  clauses_.emplace_back(FieldEquals{std::move(field), std::move(value)});
  return *this;
}

Filter& Filter::has_key(std::string field, std::string key) {
  clauses_.emplace_back(HasKey{std::move(field), std::move(key)});
  return *this;
}

Filter& Filter::in_range(std::string field, std::optional<double> min, std::optional<double> max) {
  clauses_.emplace_back(InRange{std::move(field), min, max});
  return *this;
}

namespace {

struct ClauseMatcher {
  const DocumentValue& doc;

  bool operator()(const FieldEquals& c) const {
    const auto* v = find_field(doc, c.field);
    return v != nullptr && *v == c.value;
  }

  bool operator()(const HasKey& c) const {
    const auto* v = find_field(doc, c.field);
    if (v == nullptr || !v->is_object()) return false;
    auto it = v->find(c.key);
    return it != v->end() && !it->is_null() && *it != false;
  }

  bool operator()(const InRange& c) const {
    const auto* v = find_field(doc, c.field);
    if (v == nullptr || !v->is_number()) return false;
    double x = v->get<double>();
    if (c.min && x < *c.min) return false;
    if (c.max && x > *c.max) return false;
    return true;
  }
};

}  // namespace

bool Filter::matches(const DocumentValue& doc) const {
  ClauseMatcher m{doc};
  for (const auto& c : clauses_) {
    if (!std::visit(m, c)) return false;
  }
  return true;
}

DocumentValue Filter::to_json() const {
  DocumentValue all = DocumentValue::array();
  for (const auto& c : clauses_) {
    std::visit(
        [&](const auto& clause) {
          using T = std::decay_t<decltype(clause)>;
          if constexpr (std::is_same_v<T, FieldEquals>) {
            all.push_back({{"eq", {{"field", clause.field}, {"value", clause.value}}}});
          } else if constexpr (std::is_same_v<T, HasKey>) {
            all.push_back({{"has", {{"field", clause.field}, {"key", clause.key}}}});
          } else {
            DocumentValue r = {{"field", clause.field}};
            if (clause.min) r["min"] = *clause.min;
            if (clause.max) r["max"] = *clause.max;
            all.push_back({{"range", r}});
          }
        },
        c);
  }
  return {{"all", all}};
}

Filter Filter::from_json(const DocumentValue& j) {
  Filter f;
  if (j.is_null()) return f;
  if (!j.is_object() || !j.contains("all") || !j.at("all").is_array())
    throw std::invalid_argument("filter must be {\"all\": [...]}");
  for (const auto& c : j.at("all")) {
    if (c.contains("eq")) {
      f.equals(c.at("eq").at("field").get<std::string>(), c.at("eq").at("value"));
    } else if (c.contains("has")) {
      f.has_key(c.at("has").at("field").get<std::string>(), c.at("has").at("key").get<std::string>());
    } else if (c.contains("range")) {
      const auto& r = c.at("range");
      std::optional<double> lo, hi;
      if (r.contains("min")) lo = r.at("min").get<double>();
      if (r.contains("max")) hi = r.at("max").get<double>();
      f.in_range(r.at("field").get<std::string>(), lo, hi);
    } else {
      throw std::invalid_argument("unknown filter clause");
    }
  }
  return f;
}

}  // namespace hikester::store
