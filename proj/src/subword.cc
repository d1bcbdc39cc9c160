#include "fader/subword.h"

#include "fader/hash.h"
#include "fader/text.h"

namespace fader::subword {

std::vector<std::string> CharNgrams(const std::string& word, int nmin, int nmax) {
  std::vector<char32_t> cps = {U'<'};
  for (char32_t cp : text::DecodeUtf8(word)) cps.push_back(cp);
  cps.push_back(U'>');
  std::vector<std::string> out;
  const int size = static_cast<int>(cps.size());
  for (int start = 0; start < size; ++start) {
    std::string gram;
    for (int len = 1; len <= nmax && start + len <= size; ++len) {
      text::AppendUtf8(cps[start + len - 1], &gram);
      if (len >= nmin) out.push_back(gram);
    }
  }
  return out;
}

std::uint32_t BucketOf(const std::string& ngram, std::uint32_t buckets) {
  return static_cast<std::uint32_t>(Fnv1a64(ngram) % buckets);
}

std::vector<std::uint32_t> Buckets(const std::string& word, int nmin, int nmax,
                                   std::uint32_t buckets) {
  std::vector<std::uint32_t> out;
  for (const auto& gram : CharNgrams(word, nmin, nmax)) out.push_back(BucketOf(gram, buckets));
  return out;
}

}  // namespace fader::subword
