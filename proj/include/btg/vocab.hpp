#pragma once

#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "btg/errors.hpp"

namespace btg {

// Interning table shared by all sentences of a corpus.
class Vocabulary {
 public:
  int intern(const std::string& token);
  int lookup(const std::string& token) const;  // -1 if absent
  const std::string& token(int id) const;
  std::size_t size() const { return tokens_.size(); }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> ids_;
};

using VocabPtr = std::shared_ptr<Vocabulary>;

// Half-open token span [begin, end).
struct Span {
  int begin = 0;
  int end = 0;

  int width() const { return end - begin; }
  bool valid_in(int len) const { return 0 <= begin && begin < end && end <= len; }
  friend bool operator==(const Span&, const Span&) = default;
};

// Non-empty token-id sequence over a shared vocabulary.
class Sentence {
 public:
  Sentence(VocabPtr vocab, std::vector<int> ids);

  // Whitespace-tokenizes `text`, interning tokens as needed.
  static Sentence from_text(const VocabPtr& vocab, const std::string& text);

  int size() const { return static_cast<int>(ids_.size()); }
  int token(int i) const { return ids_[i]; }
  const std::vector<int>& ids() const { return ids_; }
  const VocabPtr& vocab() const { return vocab_; }
  Span full_span() const { return Span{0, size()}; }

  std::string text() const { return span_text(full_span()); }
  std::string span_text(Span s) const;

 private:
  VocabPtr vocab_;
  std::vector<int> ids_;
};

std::vector<std::string> split_tokens(const std::string& text);
std::string join_tokens(const std::vector<std::string>& tokens);

}  // namespace btg
