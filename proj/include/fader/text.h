#ifndef FADER_TEXT_H_
#define FADER_TEXT_H_

#include <string>
#include <string_view>
#include <vector>

namespace fader::text {

// Decodes UTF-8 into code points. Invalid bytes decode to U+FFFD.
std::vector<char32_t> DecodeUtf8(std::string_view s);
void AppendUtf8(char32_t cp, std::string* out);
std::string EncodeUtf8(const std::vector<char32_t>& cps);

bool IsSpace(char32_t cp);
bool IsPunct(char32_t cp);
// Letters and digits, plus any non-ASCII code point that is neither space
// nor punctuation (scripts without case or word spacing count as letters).
bool IsAlnum(char32_t cp);

// ASCII lower-casing; other code points pass through unchanged.
std::string FoldCase(std::string_view s);

// Trims and collapses internal runs of whitespace to one ASCII space.
std::string NormalizeSpace(std::string_view s);

std::vector<std::string> Split(std::string_view s, char sep);
std::string Join(const std::vector<std::string>& parts, std::string_view sep);

}  // namespace fader::text

#endif  // FADER_TEXT_H_
