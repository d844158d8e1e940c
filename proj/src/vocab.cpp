#include "btg/vocab.hpp"

#include <sstream>

namespace btg {

int Vocabulary::intern(const std::string& token) {
  auto it = ids_.find(token);
  if (it != ids_.end()) return it->second;
  int id = static_cast<int>(tokens_.size());
  tokens_.push_back(token);
  ids_.emplace(token, id);
  return id;
}

int Vocabulary::lookup(const std::string& token) const {
  auto it = ids_.find(token);
  return it == ids_.end() ? -1 : it->second;
}

const std::string& Vocabulary::token(int id) const {
  if (id < 0 || id >= static_cast<int>(tokens_.size()))
    throw StructureError("vocabulary id out of range");
  return tokens_[id];
}

Sentence::Sentence(VocabPtr vocab, std::vector<int> ids)
    : vocab_(std::move(vocab)), ids_(std::move(ids)) {
  if (!vocab_) throw StructureError("sentence requires a vocabulary");
  if (ids_.empty()) throw StructureError("sentence must be non-empty");
  for (int id : ids_) vocab_->token(id);  // resolvability check
}

Sentence Sentence::from_text(const VocabPtr& vocab, const std::string& text) {
  std::vector<int> ids;
  for (const auto& tok : split_tokens(text)) ids.push_back(vocab->intern(tok));
  return Sentence(vocab, std::move(ids));
}

std::string Sentence::span_text(Span s) const {
  if (!s.valid_in(size())) throw StructureError("span out of range");
  std::string out;
  for (int i = s.begin; i < s.end; ++i) {
    if (i > s.begin) out += ' ';
    out += vocab_->token(ids_[i]);
  }
  return out;
}

std::vector<std::string> split_tokens(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

std::string join_tokens(const std::vector<std::string>& tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i > 0) out += ' ';
    out += tokens[i];
  }
  return out;
}

}  // namespace btg
