#pragma once

// Reference implementations used only as test oracles. Each is written
// from the definitions directly and shares no code with the library.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

namespace oracle {

// Geohash by integer quantisation: lon gets ceil(5p/2) bits, lat the rest,
// and the bits are interleaved starting with lon.
inline std::string geohash(double lat, double lon, int precision) {
  static const char* alphabet = "0123456789bcdefghjkmnpqrstuvwxyz";
  const int total = 5 * precision;
  const int lon_bits = (total + 1) / 2;
  const int lat_bits = total / 2;
  auto quantise = [](double v, double lo, double hi, int bits) {
    const double cells = std::ldexp(1.0, bits);
    auto q = static_cast<std::uint64_t>(std::floor((v - lo) / (hi - lo) * cells));
    return std::min<std::uint64_t>(q, static_cast<std::uint64_t>(cells) - 1);
  };
  std::uint64_t qlon = quantise(lon, -180.0, 180.0, lon_bits);
  std::uint64_t qlat = quantise(lat, -90.0, 90.0, lat_bits);
  std::string out;
  int li = lon_bits - 1, ai = lat_bits - 1;
  int value = 0;
  for (int bit = 0; bit < total; ++bit) {
    int b = bit % 2 == 0 ? static_cast<int>((qlon >> li--) & 1U) : static_cast<int>((qlat >> ai--) & 1U);
    value = value * 2 + b;
    if (bit % 5 == 4) {
      out.push_back(alphabet[value]);
      value = 0;
    }
  }
  return out;
}

inline double haversine(double lat1, double lon1, double lat2, double lon2) {
  constexpr double kPi = 3.14159265358979323846;
  auto rad = [&](double d) { return d * kPi / 180.0; };
  double dlat = rad(lat2 - lat1), dlon = rad(lon2 - lon1);
  double a = std::sin(dlat / 2) * std::sin(dlat / 2) +
             std::cos(rad(lat1)) * std::cos(rad(lat2)) * std::sin(dlon / 2) * std::sin(dlon / 2);
  return 2.0 * 6371.0 * std::asin(std::min(1.0, std::sqrt(a)));
}

struct NbDoc {
  std::vector<std::string> tokens;
  bool spam;
};

// Posterior P(spam | text) by multiplying plain probabilities.
inline double nb_posterior(const std::vector<NbDoc>& corpus, const std::vector<std::string>& text, double alpha) {
  std::map<std::string, double> spam_count, ham_count;
  std::set<std::string> vocab;
  double spam_docs = 0, ham_docs = 0, spam_mass = 0, ham_mass = 0;
  for (const auto& d : corpus) {
    (d.spam ? spam_docs : ham_docs) += 1;
    for (const auto& t : d.tokens) {
      vocab.insert(t);
      (d.spam ? spam_count : ham_count)[t] += 1;
      (d.spam ? spam_mass : ham_mass) += 1;
    }
  }
  const double v = static_cast<double>(vocab.size());
  double ps = spam_docs / (spam_docs + ham_docs);
  double ph = ham_docs / (spam_docs + ham_docs);
  for (const auto& t : text) {
    if (v == 0) break;
    ps *= (spam_count[t] + alpha) / (spam_mass + alpha * v);
    ph *= (ham_count[t] + alpha) / (ham_mass + alpha * v);
  }
  return ps / (ps + ph);
}

struct SearchDoc {
  std::string id;
  std::map<std::string, int> terms;
  std::set<std::string> tags;
  int hour;
  std::string date;
};

struct SearchSpec {
  std::vector<std::string> terms;  // distinct, lowercase, in query order
  std::set<std::string> tags;
  std::optional<std::pair<int, int>> hours;
  std::optional<std::pair<std::string, std::string>> dates;
  std::size_t limit;
};

inline std::vector<std::pair<std::string, double>> search(const std::vector<SearchDoc>& docs, const SearchSpec& q) {
  const double n = static_cast<double>(docs.size());
  std::vector<std::pair<std::string, double>> hits;
  for (const auto& d : docs) {
    bool ok = std::all_of(q.tags.begin(), q.tags.end(), [&](const std::string& t) { return d.tags.count(t) > 0; });
    if (q.hours) ok = ok && d.hour >= q.hours->first && d.hour <= q.hours->second;
    if (q.dates) ok = ok && d.date >= q.dates->first && d.date <= q.dates->second;
    if (!ok) continue;
    if (q.terms.empty()) {
      hits.emplace_back(d.id, 0.0);
      continue;
    }
    double score = 0.0;
    bool any = false;
    for (const auto& t : q.terms) {
      auto it = d.terms.find(t);
      if (it == d.terms.end()) continue;
      double df = 0;
      for (const auto& other : docs) df += other.terms.count(t) ? 1 : 0;
      score += it->second * std::log(1.0 + n / df);
      any = true;
    }
    if (any) hits.emplace_back(d.id, score);
  }
  std::sort(hits.begin(), hits.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  if (hits.size() > q.limit) hits.resize(q.limit);
  return hits;
}

// Cosine of a weight map against the 0/1 vector of `tags`, over the union
// of both key sets.
inline double interest(const std::map<std::string, double>& weights, const std::set<std::string>& tags) {
  std::set<std::string> keys(tags.begin(), tags.end());
  for (const auto& [k, _] : weights) keys.insert(k);
  double dot = 0, nw = 0, nt = 0;
  for (const auto& k : keys) {
    double w = weights.count(k) ? weights.at(k) : 0.0;
    double t = tags.count(k) ? 1.0 : 0.0;
    dot += w * t;
    nw += w * w;
    nt += t * t;
  }
  if (nw == 0 || nt == 0) return 0.0;
  return dot / (std::sqrt(nw) * std::sqrt(nt));
}

struct PlaceRow {
  std::set<std::string> tags;
  int hour;
  int day;
  std::string cell;
  long attendance;
};

inline std::vector<std::pair<std::string, long>> places(const std::vector<PlaceRow>& rows, const std::string& tag,
                                                        int hour, int day, std::size_t k) {
  std::map<std::string, long> sums;
  for (const auto& r : rows)
    if (r.tags.count(tag) && r.hour == hour && r.day == day) sums[r.cell] += r.attendance;
  std::vector<std::pair<std::string, long>> out(sums.begin(), sums.end());
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  if (out.size() > k) out.resize(k);
  return out;
}

// Mean loss of a one-hidden-layer network given its flattened parameters:
// hidden weights row-major, hidden bias, output weights, output bias.
inline double mlp_loss(const std::vector<double>& params, std::size_t inputs, std::size_t hidden,
                       const std::vector<std::vector<double>>& x, const std::vector<double>& y, bool cross_entropy,
                       bool sigmoid_output) {
  auto sig = [](double z) { return 1.0 / (1.0 + std::exp(-z)); };
  const double* w1 = params.data();
  const double* b1 = w1 + hidden * inputs;
  const double* w2 = b1 + hidden;
  const double* b2 = w2 + hidden;
  double total = 0.0;
  for (std::size_t n = 0; n < x.size(); ++n) {
    double out = *b2;
    for (std::size_t h = 0; h < hidden; ++h) {
      double z = b1[h];
      for (std::size_t i = 0; i < inputs; ++i) z += w1[h * inputs + i] * x[n][i];
      out += w2[h] * sig(z);
    }
    double p = sigmoid_output ? sig(out) : out;
    total += cross_entropy ? -(y[n] * std::log(p) + (1 - y[n]) * std::log(1 - p)) : (p - y[n]) * (p - y[n]);
  }
  return total / static_cast<double>(x.size());
}

struct KnnExample {
  std::map<std::string, int> counts;
  bool spam;
};

// Sorts every stored example by cosine distance (stable) and takes the
// majority of the first k.
inline bool knn_is_spam(const std::vector<KnnExample>& stored, const std::map<std::string, int>& query, std::size_t k) {
  auto distance = [](const std::map<std::string, int>& a, const std::map<std::string, int>& b) {
    std::set<std::string> keys;
    for (const auto& [t, _] : a) keys.insert(t);
    for (const auto& [t, _] : b) keys.insert(t);
    double dot = 0, na = 0, nb = 0;
    for (const auto& t : keys) {
      double va = a.count(t) ? a.at(t) : 0, vb = b.count(t) ? b.at(t) : 0;
      dot += va * vb;
      na += va * va;
      nb += vb * vb;
    }
    if (na == 0 || nb == 0) return 1.0;
    return 1.0 - dot / (std::sqrt(na) * std::sqrt(nb));
  };
  std::vector<std::pair<double, std::size_t>> order;
  for (std::size_t i = 0; i < stored.size(); ++i) order.emplace_back(distance(stored[i].counts, query), i);
  std::stable_sort(order.begin(), order.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  std::size_t spam = 0;
  for (std::size_t i = 0; i < k; ++i) spam += stored[order[i].second].spam ? 1 : 0;
  return 2 * spam > k;
}

}  // namespace oracle
