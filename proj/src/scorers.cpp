#include "btg/scorers.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

#include "btg/errors.hpp"

namespace btg {

namespace {

// Fixed FNV-1a over int tuples so feature indices are identical across
// platforms and standard libraries.
std::uint64_t fnv1a(std::uint64_t h, std::uint64_t v) {
  for (int b = 0; b < 8; ++b) {
    h ^= (v >> (8 * b)) & 0xff;
    h *= 1099511628211ULL;
  }
  return h;
}

std::uint64_t feat(std::uint64_t tmpl, std::uint64_t a, std::uint64_t b = 0,
                   std::uint64_t c = 0) {
  std::uint64_t h = 1469598103934665603ULL;
  h = fnv1a(h, tmpl);
  h = fnv1a(h, a);
  h = fnv1a(h, b);
  h = fnv1a(h, c);
  return h;
}

int width_bucket(int w) { return std::min(w, 8); }

void write_sparse_params(std::ostream& out, std::span<const double> params) {
  std::size_t nonzero = 0;
  for (double p : params)
    if (p != 0.0) ++nonzero;
  out << params.size() << ' ' << nonzero << '\n';
  char buf[64];
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i] == 0.0) continue;
    std::snprintf(buf, sizeof(buf), "%zu %.17g\n", i, params[i]);
    out << buf;
  }
}

void read_sparse_params(std::istream& in, std::vector<double>& params) {
  std::size_t dim = 0, nonzero = 0;
  if (!(in >> dim >> nonzero)) throw DataError("bad scorer parameter header");
  params.assign(dim, 0.0);
  for (std::size_t n = 0; n < nonzero; ++n) {
    std::size_t i;
    double v;
    if (!(in >> i >> v) || i >= dim)
      throw DataError("bad scorer parameter entry");
    params[i] = v;
  }
}

void randomize_params(std::vector<double>& params, Rng& rng, double scale) {
  for (double& p : params) p = (2.0 * rng.uniform01() - 1.0) * scale;
}

constexpr std::uint64_t kRestIndex = 0xffffffULL;

}  // namespace

int LogLinearTreeScorer::collect(const Sentence& x, const Sentence* y, int i,
                                 int j, int k, NodeKind parent,
                                 std::uint64_t* out) const {
  if (!(0 <= i && i < j && j < k && k <= x.size()))
    throw StructureError("rule indices out of range");
  std::uint64_t kind = parent == NodeKind::S ? 0 : 1;
  std::size_t d = params_.size();
  int c = 0;
  out[c++] = feat(1, kind, width_bucket(j - i), width_bucket(k - j)) % d;
  out[c++] = feat(2, kind, x.token(i)) % d;
  out[c++] = feat(3, kind, x.token(j - 1)) % d;
  out[c++] = feat(4, kind, x.token(j)) % d;
  out[c++] = feat(5, kind, x.token(k - 1)) % d;
  out[c++] = feat(6, kind, x.token(j - 1), x.token(j)) % d;
  if (target_features_ && y != nullptr) {
    int ylen = std::min(y->size(), 16);
    out[c++] = feat(7, kind, ylen) % d;
    out[c++] = feat(8, kind, x.token(j), ylen) % d;
  }
  return c;
}

double LogLinearTreeScorer::rule_score(const Sentence& x, const Sentence* y,
                                       int i, int j, int k,
                                       NodeKind parent) const {
  std::uint64_t ids[8];
  int c = collect(x, y, i, j, k, parent, ids);
  double s = 0.0;
  for (int t = 0; t < c; ++t) s += params_[ids[t]];
  return s;
}

void LogLinearTreeScorer::add_score_gradient(const Sentence& x,
                                             const Sentence* y, int i, int j,
                                             int k, NodeKind parent,
                                             double weight,
                                             DenseGradient& grad) const {
  if (weight == 0.0) return;
  std::uint64_t ids[8];
  int c = collect(x, y, i, j, k, parent, ids);
  for (int t = 0; t < c; ++t) grad[ids[t]] += weight;
}

void LogLinearTreeScorer::apply_gradient(const DenseGradient& grad,
                                         double scale) {
  for (std::size_t i = 0; i < params_.size(); ++i)
    params_[i] += scale * grad[i];
}

void LogLinearTreeScorer::randomize(Rng& rng, double scale) {
  randomize_params(params_, rng, scale);
}

void LogLinearTreeScorer::save(std::ostream& out) const {
  out << "tree-loglinear " << (target_features_ ? 1 : 0) << '\n';
  write_sparse_params(out, params_);
}

void LogLinearTreeScorer::load(std::istream& in) {
  std::string tag;
  int tf = 0;
  if (!(in >> tag >> tf) || tag != "tree-loglinear")
    throw DataError("bad tree scorer checkpoint section");
  target_features_ = tf != 0;
  read_sparse_params(in, params_);
}

int LogLinearSegScorer::collect(const Sentence& y, int a, int b, int c,
                                std::uint64_t* out) const {
  if (!(0 <= a && a < b && b < c && c <= y.size()))
    throw StructureError("split indices out of range");
  std::size_t d = params_.size();
  int n = 0;
  out[n++] = feat(11, width_bucket(b - a), width_bucket(c - b)) % d;
  out[n++] = feat(12, y.token(a)) % d;
  out[n++] = feat(13, y.token(b - 1)) % d;
  out[n++] = feat(14, y.token(b)) % d;
  out[n++] = feat(15, y.token(c - 1)) % d;
  out[n++] = feat(16, y.token(b - 1), y.token(b)) % d;
  return n;
}

double LogLinearSegScorer::split_score(const Sentence& y, int a, int b,
                                       int c) const {
  std::uint64_t ids[6];
  int n = collect(y, a, b, c, ids);
  double s = 0.0;
  for (int t = 0; t < n; ++t) s += params_[ids[t]];
  return s;
}

void LogLinearSegScorer::add_score_gradient(const Sentence& y, int a, int b,
                                            int c, double weight,
                                            DenseGradient& grad) const {
  if (weight == 0.0) return;
  std::uint64_t ids[6];
  int n = collect(y, a, b, c, ids);
  for (int t = 0; t < n; ++t) grad[ids[t]] += weight;
}

void LogLinearSegScorer::apply_gradient(const DenseGradient& grad,
                                        double scale) {
  for (std::size_t i = 0; i < params_.size(); ++i)
    params_[i] += scale * grad[i];
}

void LogLinearSegScorer::randomize(Rng& rng, double scale) {
  randomize_params(params_, rng, scale);
}

void LogLinearSegScorer::save(std::ostream& out) const {
  out << "seg-loglinear\n";
  write_sparse_params(out, params_);
}

void LogLinearSegScorer::load(std::istream& in) {
  std::string tag;
  if (!(in >> tag) || tag != "seg-loglinear")
    throw DataError("bad seg scorer checkpoint section");
  read_sparse_params(in, params_);
}

int phrase_token_count(const std::string& phrase) {
  if (phrase.empty()) return 0;
  int n = 1;
  for (char ch : phrase)
    if (ch == ' ') ++n;
  return n;
}

TabularPhraseScorer::TabularPhraseScorer(int length_cap, int smooth_vocab,
                                         double len_lambda)
    : cap_(length_cap),
      smooth_vocab_(std::max(smooth_vocab, 2)),
      len_lambda_(len_lambda) {
  if (cap_ < 1) throw StructureError("phrase length cap must be positive");
  if (!(len_lambda_ > 0.0 && len_lambda_ < 1.0))
    throw StructureError("length smoothing parameter must be in (0,1)");
}

std::string TabularPhraseScorer::key_string(const std::string& source,
                                            PhraseLevel level) {
  return (level == PhraseLevel::Sentence ? "S\x1f" : "G\x1f") + source;
}

const TabularPhraseScorer::KeyData* TabularPhraseScorer::find_key(
    const std::string& source, PhraseLevel level) const {
  auto it = table_.find(key_string(source, level));
  return it == table_.end() ? nullptr : &it->second;
}

TabularPhraseScorer::KeyData& TabularPhraseScorer::ensure_key(
    const std::string& source, PhraseLevel level) {
  auto [it, inserted] = table_.try_emplace(key_string(source, level));
  if (inserted) {
    it->second.id = static_cast<int>(keys_.size());
    it->second.rest_logp = kLogOne;  // all mass on the smoothing model
    keys_.push_back(KeyRef{source, level});
  }
  return it->second;
}

double TabularPhraseScorer::log_smooth(int token_len) const {
  if (token_len < 1 || token_len > cap_) return kLogZero;
  // truncated geometric over lengths 1..cap
  double loglen;
  if (token_len < cap_)
    loglen = std::log(len_lambda_) + (token_len - 1) * std::log1p(-len_lambda_);
  else
    loglen = (token_len - 1) * std::log1p(-len_lambda_);
  return loglen - token_len * std::log(static_cast<double>(smooth_vocab_));
}

double TabularPhraseScorer::score_for_key(const std::string& source,
                                          PhraseLevel level,
                                          const std::string& phrase) const {
  int len = phrase_token_count(phrase);
  if (len == 0) throw StructureError("empty phrase");
  if (len > cap_) return kLogZero;  // unsupported-phrase signal
  const KeyData* key = find_key(source, level);
  if (key == nullptr) return log_smooth(len);
  auto it = key->index.find(phrase);
  if (it != key->index.end()) return key->entries[it->second].logp;
  return key->rest_logp + log_smooth(len);
}

double TabularPhraseScorer::phrase_score(const Sentence& x, Span span,
                                         const std::string& phrase) const {
  if (!span.valid_in(x.size())) throw StructureError("span out of range");
  return score_for_key(x.span_text(span), phrase_level(x, span), phrase);
}

std::vector<ScoredPhrase> TabularPhraseScorer::phrase_topk(const Sentence& x,
                                                           Span span,
                                                           int k) const {
  if (k < 1) throw StructureError("k must be positive");
  if (!span.valid_in(x.size())) throw StructureError("span out of range");
  const KeyData* key = find_key(x.span_text(span), phrase_level(x, span));
  std::vector<ScoredPhrase> out;
  if (key == nullptr) return out;
  out.reserve(key->entries.size());
  for (const auto& e : key->entries)
    if (!is_log_zero(e.logp)) out.push_back({e.phrase, e.logp});
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    if (a.log_prob != b.log_prob) return a.log_prob > b.log_prob;
    return a.phrase < b.phrase;
  });
  if (static_cast<int>(out.size()) > k) out.resize(k);
  return out;
}

std::uint64_t TabularPhraseScorer::param_id(int key_id, int entry_idx) {
  return (static_cast<std::uint64_t>(key_id) << 24) |
         static_cast<std::uint64_t>(entry_idx);
}

void TabularPhraseScorer::add_logprob_gradient(const Sentence& x, Span span,
                                               const std::string& phrase,
                                               double weight,
                                               SparseGradient& grad) const {
  if (weight == 0.0) return;
  const KeyData* key = find_key(x.span_text(span), phrase_level(x, span));
  if (key == nullptr) return;  // smoothing-only keys carry no parameters
  auto it = key->index.find(phrase);
  int target = it == key->index.end() ? -1 : it->second;
  // d log p(v) / d logit_i = 1[i = v] - p_i, with unseen phrases counted
  // as the rest outcome.
  for (std::size_t e = 0; e < key->entries.size(); ++e) {
    double p = std::exp(key->entries[e].logp);
    double g = (static_cast<int>(e) == target ? 1.0 : 0.0) - p;
    if (g != 0.0) grad[param_id(key->id, static_cast<int>(e))] += weight * g;
  }
  double p_rest = std::exp(key->rest_logp);
  double g_rest = (target < 0 ? 1.0 : 0.0) - p_rest;
  if (g_rest != 0.0)
    grad[param_id(key->id, static_cast<int>(kRestIndex))] += weight * g_rest;
}

void TabularPhraseScorer::renormalize(KeyData& key) {
  double lse = key.rest_logp;
  for (const auto& e : key.entries) lse = log_add(lse, e.logp);
  if (is_log_zero(lse)) throw DataError("phrase key lost all mass");
  for (auto& e : key.entries) e.logp -= lse;
  key.rest_logp -= lse;
}

void TabularPhraseScorer::apply_gradient(const SparseGradient& grad,
                                         double scale) {
  std::vector<KeyData*> touched;
  for (const auto& [pid, g] : grad) {
    int key_id = static_cast<int>(pid >> 24);
    std::uint64_t entry = pid & kRestIndex;
    if (key_id < 0 || key_id >= static_cast<int>(keys_.size())) continue;
    KeyData& key = ensure_key(keys_[key_id].source, keys_[key_id].level);
    if (entry == kRestIndex)
      key.rest_logp += scale * g;
    else if (entry < key.entries.size())
      key.entries[entry].logp += scale * g;
    touched.push_back(&key);
  }
  std::sort(touched.begin(), touched.end());
  touched.erase(std::unique(touched.begin(), touched.end()), touched.end());
  for (KeyData* key : touched) renormalize(*key);
}

void TabularPhraseScorer::ensure_entry(const Sentence& x, Span span,
                                       const std::string& phrase) {
  int len = phrase_token_count(phrase);
  if (len == 0) throw StructureError("empty phrase");
  if (len > cap_) return;  // beyond the cap: stays unsupported
  KeyData& key = ensure_key(x.span_text(span), phrase_level(x, span));
  if (key.index.count(phrase)) return;
  double p_rest = std::exp(key.rest_logp);
  double d = std::max(1e-6, p_rest * std::exp(log_smooth(len)));
  d = std::min(d, 0.5);
  if (d <= p_rest) {
    // steal from the smoothing mass; existing entries keep exact scores
    key.rest_logp = std::log(p_rest - d);
  } else {
    double shrink = std::log1p(-d);
    for (auto& e : key.entries) e.logp += shrink;
    key.rest_logp += shrink;
  }
  key.index.emplace(phrase, static_cast<int>(key.entries.size()));
  key.entries.push_back(Entry{phrase, std::log(d)});
}

void TabularPhraseScorer::add_entry(const std::string& source,
                                    PhraseLevel level,
                                    const std::string& phrase,
                                    double log_prob) {
  int len = phrase_token_count(phrase);
  if (len == 0) throw StructureError("empty phrase");
  if (len > cap_)
    throw DataError("phrase exceeds length cap: " + phrase);
  if (log_prob > 1e-9) throw DataError("phrase log-probability above zero");
  KeyData& key = ensure_key(source, level);
  if (key.index.count(phrase))
    throw DataError("duplicate phrase entry: " + phrase);
  double mass = std::exp(log_prob);
  double rest = std::exp(key.rest_logp) - mass;
  if (rest < -1e-9)
    throw DataError("phrase probabilities for key exceed one: " + source);
  key.rest_logp = rest <= 0.0 ? kLogZero : std::log(rest);
  key.index.emplace(phrase, static_cast<int>(key.entries.size()));
  key.entries.push_back(Entry{phrase, log_prob});
}

double TabularPhraseScorer::rest_mass(const std::string& source,
                                      PhraseLevel level) const {
  const KeyData* key = find_key(source, level);
  return key == nullptr ? 1.0 : std::exp(key->rest_logp);
}

std::size_t TabularPhraseScorer::entry_count() const {
  std::size_t n = 0;
  for (const auto& [_, key] : table_) n += key.entries.size();
  return n;
}

void TabularPhraseScorer::validate_normalization(double tol) const {
  for (const auto& [name, key] : table_) {
    double sum = std::exp(key.rest_logp);
    for (const auto& e : key.entries) sum += std::exp(e.logp);
    if (std::abs(sum - 1.0) > tol)
      throw DataError("phrase key not normalized: " + name);
  }
}

void TabularPhraseScorer::write_entries(std::ostream& out) const {
  char buf[64];
  std::vector<int> order(keys_.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (keys_[a].source != keys_[b].source)
      return keys_[a].source < keys_[b].source;
    return static_cast<int>(keys_[a].level) < static_cast<int>(keys_[b].level);
  });
  for (int id : order) {
    const KeyData* key = find_key(keys_[id].source, keys_[id].level);
    std::vector<int> entry_order(key->entries.size());
    for (std::size_t i = 0; i < entry_order.size(); ++i)
      entry_order[i] = static_cast<int>(i);
    std::sort(entry_order.begin(), entry_order.end(), [&](int a, int b) {
      return key->entries[a].phrase < key->entries[b].phrase;
    });
    for (int e : entry_order) {
      const Entry& entry = key->entries[e];
      if (is_log_zero(entry.logp)) continue;
      std::snprintf(buf, sizeof(buf), "%.17g", entry.logp);
      out << keys_[id].source << '\t' << entry.phrase << '\t' << buf << '\t'
          << (keys_[id].level == PhraseLevel::Sentence ? "SENT" : "SEG")
          << '\n';
    }
  }
}

namespace {

// Returns false on blank lines; throws on malformed ones.
bool parse_phrase_line(const std::string& line, std::size_t lineno,
                       std::string* source, std::string* target, double* logp,
                       PhraseLevel* level) {
  if (line.empty()) return false;
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    std::size_t tab = line.find('\t', start);
    fields.push_back(line.substr(start, tab == std::string::npos
                                            ? std::string::npos
                                            : tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  if (fields.size() != 4)
    throw DataError("phrase table line " + std::to_string(lineno) +
                    ": expected 4 tab-separated fields");
  if (fields[3] == "SENT")
    *level = PhraseLevel::Sentence;
  else if (fields[3] == "SEG")
    *level = PhraseLevel::Segment;
  else
    throw DataError("phrase table line " + std::to_string(lineno) +
                    ": bad level tag '" + fields[3] + "'");
  try {
    std::size_t used = 0;
    *logp = std::stod(fields[2], &used);
    if (used != fields[2].size()) throw std::invalid_argument("");
  } catch (const std::exception&) {
    throw DataError("phrase table line " + std::to_string(lineno) +
                    ": bad log-probability '" + fields[2] + "'");
  }
  *source = fields[0];
  *target = fields[1];
  return true;
}

}  // namespace

void TabularPhraseScorer::read_entries(std::istream& in) {
  table_.clear();
  keys_.clear();
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string source, target;
    double logp;
    PhraseLevel level;
    if (!parse_phrase_line(line, lineno, &source, &target, &logp, &level))
      continue;
    try {
      add_entry(source, level, target, logp);
    } catch (const DataError& err) {
      throw DataError("phrase table line " + std::to_string(lineno) + ": " +
                      err.what());
    }
  }
  validate_normalization(1e-6);
}

void TabularPhraseScorer::save(std::ostream& out) const {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", len_lambda_);
  out << "phrase-table " << cap_ << ' ' << smooth_vocab_ << ' ' << buf << '\n';
  write_entries(out);
  out << "end-phrase-table\n";
}

void TabularPhraseScorer::load(std::istream& in) {
  std::string tag;
  if (!(in >> tag >> cap_ >> smooth_vocab_ >> len_lambda_) ||
      tag != "phrase-table")
    throw DataError("bad phrase table header");
  in.ignore();
  table_.clear();
  keys_.clear();
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line == "end-phrase-table") {
      validate_normalization(1e-6);
      return;
    }
    std::string source, target;
    double logp;
    PhraseLevel level;
    if (parse_phrase_line(line, lineno, &source, &target, &logp, &level))
      add_entry(source, level, target, logp);
  }
  throw DataError("unterminated phrase table section");
}

}  // namespace btg
