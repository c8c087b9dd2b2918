// include/vsr/binary_io.h

// Copyright 2026 The vsrlab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef VSR_BINARY_IO_H_
#define VSR_BINARY_IO_H_

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <string_view>

namespace vsr {

// Little-endian writer for the project's tagged binary formats. All
// multi-byte values are written LE regardless of host order.
class BinaryWriter {
 public:
  explicit BinaryWriter(const std::filesystem::path &path);

  void WriteMagic(std::string_view magic);
  void WriteU8(uint8_t v);
  void WriteU32(uint32_t v);
  void WriteU64(uint64_t v);
  void WriteF32(float v);
  void WriteF64(double v);
  // u32 byte length followed by the raw bytes.
  void WriteString(std::string_view s);
  void WriteBytes(std::span<const uint8_t> bytes);
  void Close();

 private:
  void Put(const void *data, size_t n);

  std::filesystem::path path_;
  std::ofstream out_;
};

class BinaryReader {
 public:
  explicit BinaryReader(const std::filesystem::path &path);

  // Throws IoError naming the file when the next bytes differ from magic.
  void ExpectMagic(std::string_view magic);
  uint8_t ReadU8();
  uint32_t ReadU32();
  uint64_t ReadU64();
  float ReadF32();
  double ReadF64();
  std::string ReadString();
  void ReadBytes(std::span<uint8_t> bytes);
  bool AtEnd();

  const std::filesystem::path &path() const { return path_; }

 private:
  void Get(void *data, size_t n);

  std::filesystem::path path_;
  std::ifstream in_;
};

}  // namespace vsr

#endif  // VSR_BINARY_IO_H_
