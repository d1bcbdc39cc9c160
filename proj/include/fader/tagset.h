#ifndef FADER_TAGSET_H_
#define FADER_TAGSET_H_

#include <optional>
#include <vector>

#include "fader/types.h"

namespace fader {

// Tag inventory {O} plus B, I, L, U for each coarse type, with the BILOU
// transition mask. Index 0 is O; type t contributes indices 1+4t .. 4+4t.
class TagSet {
 public:
  TagSet() : TagSet(std::vector<CoarseType>{}) {}
  explicit TagSet(std::vector<CoarseType> types);

  int size() const { return static_cast<int>(tags_.size()); }
  const std::vector<CoarseType>& types() const { return types_; }
  const Tag& tag(int index) const { return tags_[index]; }
  std::optional<int> Index(const Tag& tag) const;

  bool Allowed(int from, int to) const { return allowed_[from * size() + to]; }
  bool StartAllowed(int to) const { return start_[to]; }
  bool EndAllowed(int from) const { return end_[from]; }

  // Index path of a tag sequence; nullopt if some tag is not in the set.
  std::optional<std::vector<int>> Encode(const TagSequence& tags) const;
  TagSequence Decode(const std::vector<int>& path) const;
  // Whether the path is mask-legal, including start and end.
  bool Legal(const std::vector<int>& path) const;

  bool operator==(const TagSet& other) const { return types_ == other.types_; }

 private:
  std::vector<CoarseType> types_;
  std::vector<Tag> tags_;
  std::vector<bool> allowed_, start_, end_;
};

}  // namespace fader

#endif  // FADER_TAGSET_H_
