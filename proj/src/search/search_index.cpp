#include "hikester/search/search_index.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <set>
#include <stdexcept>

#include "hikester/spam/tokenizer.hpp"

namespace hikester::search {

void validate(const SearchQuery& q) {
  if (q.limit == 0) throw std::invalid_argument("limit must be positive");
  if (q.text_terms.empty() && q.tags.empty() && !q.hour_range && !q.date_range)
    throw std::invalid_argument("query needs text, tags, or a range");
}

std::vector<std::string> normalize_terms(const std::vector<std::string>& raw) {
  std::set<std::string> seen;
  std::vector<std::string> out;
  for (const auto& t : raw) {
    std::string lower;
    for (char c : t) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    if (!lower.empty() && seen.insert(lower).second) out.push_back(std::move(lower));
  }
  return out;
}

void SearchIndex::index_event(const EventRecord& e) {
  Fields fields{e.tags, e.start_hour, e.start_date, spam::tokenize(e.title + " " + e.description)};
  std::unique_lock lock(mu_);
  remove_locked(e.id);
  for (const auto& [term, count] : fields.terms) postings_[term][e.id] = count;
  docs_.emplace(e.id, std::move(fields));
}

void SearchIndex::remove_event(const EventId& id) {
  std::unique_lock lock(mu_);
  remove_locked(id);
}

void SearchIndex::remove_locked(const EventId& id) {
  auto it = docs_.find(id);
  if (it == docs_.end()) return;
  for (const auto& [term, count] : it->second.terms) {
    auto p = postings_.find(term);
    if (p == postings_.end()) continue;
    p->second.erase(id);
    if (p->second.empty()) postings_.erase(p);
  }
  docs_.erase(it);
}

void SearchIndex::clear() {
  std::unique_lock lock(mu_);
  postings_.clear();
  docs_.clear();
}

std::vector<SearchHit> SearchIndex::search(const SearchQuery& q) const {
  validate(q);
  auto terms = normalize_terms(q.text_terms);

  auto passes_filters = [&](const Fields& f) {
    for (const auto& tag : q.tags) {
      if (!f.tags.contains(tag)) return false;
    }
    if (q.hour_range && (f.start_hour < q.hour_range->first || f.start_hour > q.hour_range->second)) return false;
    if (q.date_range && (f.start_date < q.date_range->first || f.start_date > q.date_range->second)) return false;
    return true;
  };

  std::vector<SearchHit> hits;
  std::shared_lock lock(mu_);
  const double n = static_cast<double>(docs_.size());
  if (terms.empty()) {
    for (const auto& [id, fields] : docs_) {
      if (passes_filters(fields)) hits.push_back({id, 0.0});
    }
  } else {
    std::map<EventId, double> scores;
    for (const auto& term : terms) {
      auto p = postings_.find(term);
      if (p == postings_.end()) continue;
      double idf = std::log(1.0 + n / static_cast<double>(p->second.size()));
      for (const auto& [id, tf] : p->second) scores[id] += tf * idf;
    }
    for (const auto& [id, score] : scores) {
      if (passes_filters(docs_.at(id))) hits.push_back({id, score});
    }
  }
  lock.unlock();

  std::sort(hits.begin(), hits.end(), [](const SearchHit& a, const SearchHit& b) {
    return a.score != b.score ? a.score > b.score : a.event_id < b.event_id;
  });
  if (hits.size() > q.limit) hits.resize(q.limit);
  return hits;
}

std::size_t SearchIndex::document_count() const {
  std::shared_lock lock(mu_);
  return docs_.size();
}

std::size_t SearchIndex::document_frequency(const std::string& term) const {
  std::shared_lock lock(mu_);
  auto p = postings_.find(term);
  return p == postings_.end() ? 0 : p->second.size();
}

std::map<EventId, SearchIndex::Fields> SearchIndex::documents() const {
  std::shared_lock lock(mu_);
  return docs_;
}

std::map<std::string, std::map<EventId, int>> SearchIndex::postings() const {
  std::shared_lock lock(mu_);
  return postings_;
}

}  // namespace hikester::search
