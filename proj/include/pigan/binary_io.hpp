#pragma once

#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <type_traits>
#include <vector>

#include "pigan/common.hpp"

// Little-endian raw encoding helpers shared by the dataset, KL-model and
// checkpoint containers. All supported targets are little-endian.
namespace pigan::io {

template <class T>
  requires std::is_trivially_copyable_v<T>
void write_pod(std::ostream& os, const T& value) {
  os.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <class T>
  requires std::is_trivially_copyable_v<T>
T read_pod(std::istream& is) {
  T value{};
  is.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!is) throw IoError("unexpected end of file");
  return value;
}

inline void write_doubles(std::ostream& os, const double* data, std::size_t n) {
  os.write(reinterpret_cast<const char*>(data),
           static_cast<std::streamsize>(n * sizeof(double)));
}

inline void read_doubles(std::istream& is, double* data, std::size_t n) {
  is.read(reinterpret_cast<char*>(data),
          static_cast<std::streamsize>(n * sizeof(double)));
  if (!is) throw IoError("unexpected end of file");
}

inline void write_string(std::ostream& os, const std::string& s) {
  write_pod<std::uint64_t>(os, s.size());
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string read_string(std::istream& is) {
  const auto n = read_pod<std::uint64_t>(is);
  if (n > (std::uint64_t{1} << 32)) throw IoError("corrupt string length");
  std::string s(n, '\0');
  is.read(s.data(), static_cast<std::streamsize>(n));
  if (!is) throw IoError("unexpected end of file");
  return s;
}

inline void write_magic(std::ostream& os, const char (&magic)[9]) {
  os.write(magic, 8);
}

inline void expect_magic(std::istream& is, const char (&magic)[9],
                         const std::string& what) {
  char buf[8] = {};
  is.read(buf, 8);
  if (!is || std::string(buf, 8) != std::string(magic, 8))
    throw IoError("not a " + what + " file (bad magic)");
}

}  // namespace pigan::io
