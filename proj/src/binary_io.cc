// src/binary_io.cc

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

#include "vsr/binary_io.h"

#include <bit>
#include <cstring>

#include "vsr/error.h"

namespace vsr {

static_assert(std::endian::native == std::endian::little,
              "binary formats assume a little-endian host");

BinaryWriter::BinaryWriter(const std::filesystem::path &path)
    : path_(path), out_(path, std::ios::binary | std::ios::trunc) {
  if (!out_) throw IoError("cannot open for writing: " + path.string());
}

void BinaryWriter::Put(const void *data, size_t n) {
  out_.write(static_cast<const char *>(data), static_cast<std::streamsize>(n));
  if (!out_) throw IoError("write failed: " + path_.string());
}

void BinaryWriter::WriteMagic(std::string_view magic) {
  Put(magic.data(), magic.size());
}
void BinaryWriter::WriteU8(uint8_t v) { Put(&v, 1); }
void BinaryWriter::WriteU32(uint32_t v) { Put(&v, 4); }
void BinaryWriter::WriteU64(uint64_t v) { Put(&v, 8); }
void BinaryWriter::WriteF32(float v) { Put(&v, 4); }
void BinaryWriter::WriteF64(double v) { Put(&v, 8); }

void BinaryWriter::WriteString(std::string_view s) {
  WriteU32(static_cast<uint32_t>(s.size()));
  Put(s.data(), s.size());
}

void BinaryWriter::WriteBytes(std::span<const uint8_t> bytes) {
  Put(bytes.data(), bytes.size());
}

void BinaryWriter::Close() {
  out_.close();
  if (!out_) throw IoError("close failed: " + path_.string());
}

BinaryReader::BinaryReader(const std::filesystem::path &path)
    : path_(path), in_(path, std::ios::binary) {
  if (!in_) throw IoError("cannot open for reading: " + path.string());
}

void BinaryReader::Get(void *data, size_t n) {
  in_.read(static_cast<char *>(data), static_cast<std::streamsize>(n));
  if (static_cast<size_t>(in_.gcount()) != n)
    throw IoError("unexpected end of file: " + path_.string());
}

void BinaryReader::ExpectMagic(std::string_view magic) {
  std::string got(magic.size(), '\0');
  Get(got.data(), got.size());
  if (got != magic)
    throw IoError("bad magic in " + path_.string() + ": expected " +
                  std::string(magic));
}

uint8_t BinaryReader::ReadU8() {
  uint8_t v;
  Get(&v, 1);
  return v;
}
uint32_t BinaryReader::ReadU32() {
  uint32_t v;
  Get(&v, 4);
  return v;
}
uint64_t BinaryReader::ReadU64() {
  uint64_t v;
  Get(&v, 8);
  return v;
}
float BinaryReader::ReadF32() {
  float v;
  Get(&v, 4);
  return v;
}
double BinaryReader::ReadF64() {
  double v;
  Get(&v, 8);
  return v;
}

std::string BinaryReader::ReadString() {
  uint32_t n = ReadU32();
  if (n > (1u << 24)) throw IoError("implausible string length in " + path_.string());
  std::string s(n, '\0');
  Get(s.data(), n);
  return s;
}

void BinaryReader::ReadBytes(std::span<uint8_t> bytes) {
  Get(bytes.data(), bytes.size());
}

bool BinaryReader::AtEnd() {
  return in_.peek() == std::char_traits<char>::eof();
}

}  // namespace vsr
