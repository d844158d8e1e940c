#include "btg/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "btg/errors.hpp"
#include "btg/rng.hpp"

namespace btg {

ParallelCorpus load_parallel(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open corpus file: " + path);
  ParallelCorpus corpus;
  corpus.vocab = std::make_shared<Vocabulary>();
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::size_t tab = line.find('\t');
    if (tab == std::string::npos || line.find('\t', tab + 1) != std::string::npos)
      throw DataError(path + " line " + std::to_string(lineno) +
                      ": expected exactly one tab");
    std::string src = line.substr(0, tab);
    std::string tgt = line.substr(tab + 1);
    if (split_tokens(src).empty() || split_tokens(tgt).empty())
      throw DataError(path + " line " + std::to_string(lineno) +
                      ": empty sentence side");
    corpus.pairs.emplace_back(Sentence::from_text(corpus.vocab, src),
                              Sentence::from_text(corpus.vocab, tgt));
  }
  return corpus;
}

void save_parallel(const ParallelCorpus& corpus, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write corpus file: " + path);
  for (const auto& [src, tgt] : corpus.pairs)
    out << src.text() << '\t' << tgt.text() << '\n';
}

void load_phrase_table(TabularPhraseScorer& scorer, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open phrase table: " + path);
  try {
    scorer.read_entries(in);
  } catch (const DataError& err) {
    throw DataError(path + ": " + err.what());
  }
}

void save_phrase_table(const TabularPhraseScorer& scorer,
                       const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write phrase table: " + path);
  scorer.write_entries(out);
}

namespace {

double bleu4(const std::vector<std::string>& hypotheses,
             const std::vector<std::string>& references) {
  constexpr int kMaxOrder = 4;
  double matches[kMaxOrder] = {0, 0, 0, 0};
  double totals[kMaxOrder] = {0, 0, 0, 0};
  long long hyp_len = 0, ref_len = 0;
  for (std::size_t s = 0; s < hypotheses.size(); ++s) {
    auto hyp = split_tokens(hypotheses[s]);
    auto ref = split_tokens(references[s]);
    hyp_len += static_cast<long long>(hyp.size());
    ref_len += static_cast<long long>(ref.size());
    for (int order = 1; order <= kMaxOrder; ++order) {
      std::map<std::vector<std::string>, int> ref_counts;
      for (std::size_t i = 0; i + order <= ref.size(); ++i)
        ++ref_counts[{ref.begin() + i, ref.begin() + i + order}];
      std::map<std::vector<std::string>, int> hyp_counts;
      for (std::size_t i = 0; i + order <= hyp.size(); ++i)
        ++hyp_counts[{hyp.begin() + i, hyp.begin() + i + order}];
      for (const auto& [gram, count] : hyp_counts) {
        auto it = ref_counts.find(gram);
        int clipped = it == ref_counts.end() ? 0 : std::min(count, it->second);
        matches[order - 1] += clipped;
      }
      if (hyp.size() + 1 > static_cast<std::size_t>(order))
        totals[order - 1] += static_cast<double>(hyp.size() - order + 1);
    }
  }
  double log_precision = 0.0;
  for (int order = 0; order < kMaxOrder; ++order) {
    if (matches[order] <= 0.0 || totals[order] <= 0.0) return 0.0;
    log_precision += std::log(matches[order] / totals[order]) / kMaxOrder;
  }
  double bp = hyp_len < ref_len && hyp_len > 0
                  ? std::exp(1.0 - static_cast<double>(ref_len) / hyp_len)
                  : 1.0;
  return 100.0 * bp * std::exp(log_precision);
}

}  // namespace

double evaluate(const std::vector<std::string>& hypotheses,
                const std::vector<std::string>& references, Metric metric) {
  if (hypotheses.size() != references.size())
    throw StructureError("hypothesis/reference count mismatch");
  if (hypotheses.empty()) throw StructureError("nothing to evaluate");
  if (metric == Metric::ExactMatch) {
    std::size_t hits = 0;
    for (std::size_t i = 0; i < hypotheses.size(); ++i)
      if (split_tokens(hypotheses[i]) == split_tokens(references[i])) ++hits;
    return 100.0 * static_cast<double>(hits) / hypotheses.size();
  }
  return bleu4(hypotheses, references);
}

namespace {

struct PhrasePairText {
  std::string source;
  std::string target;
};

std::vector<PhrasePairText> make_phrase_pairs(const std::string& prefix,
                                              int count, int min_len,
                                              int max_len, Rng& rng) {
  std::vector<PhrasePairText> out;
  out.reserve(count);
  char buf[32];
  for (int p = 0; p < count; ++p) {
    int src_len = min_len + static_cast<int>(rng.below(max_len - min_len + 1));
    int tgt_len = min_len + static_cast<int>(rng.below(max_len - min_len + 1));
    std::string src, tgt;
    for (int t = 0; t < src_len; ++t) {
      std::snprintf(buf, sizeof(buf), "%s%02ds_%d", prefix.c_str(), p, t);
      if (t > 0) src += ' ';
      src += buf;
    }
    for (int t = 0; t < tgt_len; ++t) {
      std::snprintf(buf, sizeof(buf), "%s%02dt_%d", prefix.c_str(), p, t);
      if (t > 0) tgt += ' ';
      tgt += buf;
    }
    out.push_back({src, tgt});
  }
  return out;
}

struct ToyExample {
  int subj, verb, obj;
};

ToyExample pick(const std::vector<int>& subj_pool,
                const std::vector<int>& obj_pool, int vp_count, Rng& rng) {
  ToyExample e;
  e.subj = subj_pool[rng.below(subj_pool.size())];
  e.obj = obj_pool[rng.below(obj_pool.size())];
  e.verb = static_cast<int>(rng.below(vp_count));
  return e;
}

}  // namespace

ToyDataset gen_svo_sov(const ToyGrammarConfig& config) {
  if (config.np_pairs < 2 || config.vp_pairs < 1)
    throw DataError("toy grammar needs at least two noun and one verb pair");
  if (config.min_len < 1 || config.max_len < config.min_len)
    throw DataError("bad phrase length range");
  Rng rng(mix_seed(config.seed, 0x746f79));
  auto nps = make_phrase_pairs("np", config.np_pairs, config.min_len,
                               config.max_len, rng);
  auto vps = make_phrase_pairs("vp", config.vp_pairs, config.min_len,
                               config.max_len, rng);

  // Disjointness of the two inventories.
  std::set<std::string> np_tokens, vp_tokens;
  for (const auto& p : nps)
    for (const auto& t : split_tokens(p.source + " " + p.target))
      np_tokens.insert(t);
  for (const auto& p : vps)
    for (const auto& t : split_tokens(p.source + " " + p.target))
      vp_tokens.insert(t);
  for (const auto& t : vp_tokens)
    if (np_tokens.count(t)) throw DataError("phrase inventories overlap");

  std::vector<ToyExample> train, dev, test;
  int actual_train = config.train_size;
  nlohmann::json leakage;

  if (config.split == ToySplit::NovelPosition) {
    int heldout =
        std::max(1, static_cast<int>(std::lround(config.heldout_fraction *
                                                 config.np_pairs)));
    if (heldout >= config.np_pairs)
      throw DataError("held-out fraction leaves no regular noun phrases");
    // Even held-out ids train as subjects, odd ones as objects; the test
    // role is the swap.
    std::vector<int> subj_pool, obj_pool, regular;
    std::vector<int> train_role(config.np_pairs, -1);  // 0 subj, 1 obj
    for (int p = 0; p < config.np_pairs; ++p) {
      if (p < heldout) {
        train_role[p] = p % 2;
        (p % 2 == 0 ? subj_pool : obj_pool).push_back(p);
      } else {
        regular.push_back(p);
        subj_pool.push_back(p);
        obj_pool.push_back(p);
      }
    }
    for (int i = 0; i < config.train_size; ++i)
      train.push_back(pick(subj_pool, obj_pool, config.vp_pairs, rng));
    for (int i = 0; i < config.dev_size; ++i)
      dev.push_back(pick(subj_pool, obj_pool, config.vp_pairs, rng));
    for (int i = 0; i < config.test_size; ++i) {
      int h = static_cast<int>(rng.below(heldout));
      int other = regular[rng.below(regular.size())];
      int verb = static_cast<int>(rng.below(config.vp_pairs));
      if (train_role[h] == 0)  // trained as subject, tested as object
        test.push_back({other, verb, h});
      else
        test.push_back({h, verb, other});
    }
    // Leakage scan: no train example may use a held-out phrase in its
    // test role.
    int violations = 0;
    for (const auto& e : train) {
      if (e.subj < heldout && train_role[e.subj] != 0) ++violations;
      if (e.obj < heldout && train_role[e.obj] != 1) ++violations;
    }
    if (violations > 0) throw DataError("novel-position leakage detected");
    leakage["novel_position_train_violations"] = violations;
    leakage["heldout_noun_pairs"] = heldout;
  } else {
    // Few-shot: every noun phrase appears as a subject in exactly three
    // training examples with three distinct contexts.
    long long context_space =
        static_cast<long long>(config.vp_pairs) * config.np_pairs;
    if (context_space < 4)
      throw DataError("inventory too small for distinct few-shot contexts");
    std::set<std::pair<int, std::pair<int, int>>> train_set;
    std::vector<std::pair<int, int>> context_pool;
    std::set<std::pair<int, int>> context_seen;
    for (int s = 0; s < config.np_pairs; ++s) {
      std::set<std::pair<int, int>> used;
      while (static_cast<int>(used.size()) < 3) {
        int verb = static_cast<int>(rng.below(config.vp_pairs));
        int obj = static_cast<int>(rng.below(config.np_pairs));
        if (!used.insert({verb, obj}).second) continue;
        train.push_back({s, verb, obj});
        train_set.insert({s, {verb, obj}});
        if (context_seen.insert({verb, obj}).second)
          context_pool.push_back({verb, obj});
      }
    }
    actual_train = static_cast<int>(train.size());
    auto pick_unseen = [&](std::vector<ToyExample>& out) {
      for (int guard = 0; guard < 10000; ++guard) {
        int s = static_cast<int>(rng.below(config.np_pairs));
        auto ctx = context_pool[rng.below(context_pool.size())];
        if (train_set.count({s, ctx})) continue;
        out.push_back({s, ctx.first, ctx.second});
        return;
      }
      throw DataError("could not find an unseen subject/context pairing");
    };
    for (int i = 0; i < config.dev_size; ++i) pick_unseen(dev);
    for (int i = 0; i < config.test_size; ++i) pick_unseen(test);
    int violations = 0;
    for (const auto& e : test)
      if (train_set.count({e.subj, {e.verb, e.obj}})) ++violations;
    if (violations > 0) throw DataError("few-shot leakage detected");
    leakage["few_shot_test_violations"] = violations;
    leakage["subject_examples_each"] = 3;
  }

  ToyDataset out;
  auto vocab = std::make_shared<Vocabulary>();
  auto render = [&](const std::vector<ToyExample>& examples,
                    ParallelCorpus& corpus) {
    corpus.vocab = vocab;
    for (const auto& e : examples) {
      std::string src =
          nps[e.subj].source + " " + vps[e.verb].source + " " + nps[e.obj].source;
      std::string tgt =
          nps[e.subj].target + " " + nps[e.obj].target + " " + vps[e.verb].target;
      corpus.pairs.emplace_back(Sentence::from_text(vocab, src),
                                Sentence::from_text(vocab, tgt));
    }
  };
  render(train, out.train);
  render(dev, out.dev);
  render(test, out.test);

  nlohmann::json manifest;
  manifest["task"] = "svo-sov";
  manifest["split"] = config.split == ToySplit::NovelPosition
                          ? "novel-position"
                          : "few-shot";
  manifest["np_pairs"] = config.np_pairs;
  manifest["vp_pairs"] = config.vp_pairs;
  manifest["min_len"] = config.min_len;
  manifest["max_len"] = config.max_len;
  manifest["train_size"] = actual_train;
  manifest["dev_size"] = config.dev_size;
  manifest["test_size"] = config.test_size;
  manifest["heldout_fraction"] = config.heldout_fraction;
  manifest["seed"] = config.seed;
  manifest["leakage_checks"] = leakage;
  out.manifest_json = manifest.dump(2) + "\n";
  return out;
}

}  // namespace btg
