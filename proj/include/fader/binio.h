#ifndef FADER_BINIO_H_
#define FADER_BINIO_H_

#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>
#include <type_traits>
#include <vector>

#include "fader/error.h"

namespace fader::binio {

// Little-endian fixed-width encoding of scalars, strings and float arrays.
// The host is assumed little-endian.
class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}

  template <typename T>
  void Put(T value) {
    static_assert(std::is_arithmetic_v<T>);
    out_.write(reinterpret_cast<const char*>(&value), sizeof(T));
  }
  void PutString(const std::string& s) {
    Put<std::uint64_t>(s.size());
    out_.write(s.data(), static_cast<std::streamsize>(s.size()));
  }
  void PutFloats(const float* data, std::size_t n) {
    out_.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(n * sizeof(float)));
  }
  void PutRaw(const std::string& bytes) { out_.write(bytes.data(), bytes.size()); }

 private:
  std::ostream& out_;
};

class Reader {
 public:
  Reader(std::istream& in, std::string source) : in_(in), source_(std::move(source)) {}

  template <typename T>
  T Get() {
    static_assert(std::is_arithmetic_v<T>);
    T value;
    Read(reinterpret_cast<char*>(&value), sizeof(T));
    return value;
  }
  std::string GetString(std::size_t limit = 1 << 20) {
    const auto n = Get<std::uint64_t>();
    if (n > limit) Fail("string length out of range");
    std::string s(n, '\0');
    Read(s.data(), n);
    return s;
  }
  void GetFloats(float* data, std::size_t n) {
    Read(reinterpret_cast<char*>(data), n * sizeof(float));
  }
  void Expect(const std::string& magic) {
    std::string got(magic.size(), '\0');
    Read(got.data(), got.size());
    if (got != magic) Fail("bad magic, not a " + magic.substr(0, magic.find('\0')) + " file");
  }
  [[noreturn]] void Fail(const std::string& what) const { throw FormatError(source_, 0, what); }
  bool AtEnd() { return in_.peek() == std::char_traits<char>::eof(); }

 private:
  void Read(char* data, std::size_t n) {
    in_.read(data, static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) Fail("truncated file");
  }

  std::istream& in_;
  std::string source_;
};

}  // namespace fader::binio

#endif  // FADER_BINIO_H_
