#include "fader/tagset.h"

#include <algorithm>

#include "fader/error.h"

namespace fader {

TagSet::TagSet(std::vector<CoarseType> types) : types_(std::move(types)) {
  for (std::size_t i = 0; i < types_.size(); ++i) {
    if (std::find(types_.begin(), types_.begin() + i, types_[i]) != types_.begin() + i) {
      throw ArgumentError("duplicate type in tag set");
    }
  }
  tags_.push_back(Tag::Outside());
  for (CoarseType t : types_) {
    for (auto p : {Tag::Prefix::kB, Tag::Prefix::kI, Tag::Prefix::kL, Tag::Prefix::kU}) {
      tags_.push_back(Tag::Make(p, t));
    }
  }
  const int n = size();
  allowed_.assign(n * n, false);
  start_.assign(n, false);
  end_.assign(n, false);
  for (int to = 0; to < n; ++to) {
    start_[to] = LegalTransition(std::nullopt, tags_[to]);
    end_[to] = LegalEnd(tags_[to]);
    for (int from = 0; from < n; ++from) allowed_[from * n + to] = LegalTransition(tags_[from], tags_[to]);
  }
}

std::optional<int> TagSet::Index(const Tag& tag) const {
  for (int i = 0; i < size(); ++i) {
    if (tags_[i] == tag) return i;
  }
  return std::nullopt;
}

std::optional<std::vector<int>> TagSet::Encode(const TagSequence& tags) const {
  std::vector<int> path;
  for (const auto& t : tags) {
    auto i = Index(t);
    if (!i) return std::nullopt;
    path.push_back(*i);
  }
  return path;
}

TagSequence TagSet::Decode(const std::vector<int>& path) const {
  TagSequence out;
  for (int i : path) out.push_back(tags_[i]);
  return out;
}

bool TagSet::Legal(const std::vector<int>& path) const {
  if (path.empty()) return true;
  if (!StartAllowed(path.front()) || !EndAllowed(path.back())) return false;
  for (std::size_t i = 1; i < path.size(); ++i) {
    if (!Allowed(path[i - 1], path[i])) return false;
  }
  return true;
}

}  // namespace fader
