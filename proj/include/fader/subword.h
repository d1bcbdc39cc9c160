#ifndef FADER_SUBWORD_H_
#define FADER_SUBWORD_H_

#include <cstdint>
#include <string>
#include <vector>

namespace fader::subword {

// Character n-grams of "<word>" with lengths in [nmin, nmax], counted in code
// points, in order of start position then length. Repeats are kept.
std::vector<std::string> CharNgrams(const std::string& word, int nmin, int nmax);

// FNV-1a 64 of the n-gram's UTF-8 bytes, reduced modulo `buckets`.
std::uint32_t BucketOf(const std::string& ngram, std::uint32_t buckets);

std::vector<std::uint32_t> Buckets(const std::string& word, int nmin, int nmax,
                                   std::uint32_t buckets);

}  // namespace fader::subword

#endif  // FADER_SUBWORD_H_
