#pragma once

#include <map>
#include <optional>
#include <shared_mutex>
#include <string>
#include <utility>
#include <vector>

#include "hikester/core/model.hpp"

namespace hikester::search {

struct SearchQuery {
  std::vector<std::string> text_terms;
  TagSet tags;                                                // every tag required
  std::optional<std::pair<int, int>> hour_range;              // inclusive
  std::optional<std::pair<std::string, std::string>> date_range;  // inclusive ISO dates
  std::size_t limit = 50;
};

/// Throws std::invalid_argument when the query has no criteria or limit 0.
void validate(const SearchQuery& q);

struct SearchHit {
  EventId event_id;
  double score;

  friend bool operator==(const SearchHit&, const SearchHit&) = default;
};

/// Inverted index over event titles and descriptions plus a per-event cache
/// of the structured fields used by filters.
///
/// Scoring: for each distinct query term t present in event d,
/// tf(t, d) * ln(1 + N / df(t)), summed; N is the number of indexed events.
class SearchIndex {
 public:
  struct Fields {
    TagSet tags;
    int start_hour = 0;
    std::string start_date;
    std::map<std::string, int> terms;

    friend bool operator==(const Fields&, const Fields&) = default;
  };

  /// Replaces any previous postings for e.id.
  void index_event(const EventRecord& e);
  void remove_event(const EventId& id);
  void clear();

  /// Ranked by descending score, then ascending event id; at most q.limit hits.
  std::vector<SearchHit> search(const SearchQuery& q) const;

  std::size_t document_count() const;
  std::size_t document_frequency(const std::string& term) const;
  /// Full index state, for comparing rebuilt indexes.
  std::map<EventId, Fields> documents() const;
  std::map<std::string, std::map<EventId, int>> postings() const;

 private:
  void remove_locked(const EventId& id);

  mutable std::shared_mutex mu_;
  std::map<std::string, std::map<EventId, int>> postings_;
  std::map<EventId, Fields> docs_;
};

/// Lowercases raw query terms, drops empties and duplicates.
std::vector<std::string> normalize_terms(const std::vector<std::string>& raw);

}  // namespace hikester::search
