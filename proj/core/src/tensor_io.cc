/* Copyright 2026 The DeltaDiff Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "deltadiff/tensor_io.h"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "deltadiff/errors.h"

namespace deltadiff {
namespace {

void PutU32(std::ostream& out, uint32_t v) {
  const char bytes[4] = {static_cast<char>(v & 0xff),
                         static_cast<char>((v >> 8) & 0xff),
                         static_cast<char>((v >> 16) & 0xff),
                         static_cast<char>((v >> 24) & 0xff)};
  out.write(bytes, 4);
}

void PutU16(std::ostream& out, uint16_t v) {
  const char bytes[2] = {static_cast<char>(v & 0xff),
                         static_cast<char>((v >> 8) & 0xff)};
  out.write(bytes, 2);
}

void ReadExact(std::istream& in, char* dst, size_t n, const char* what) {
  in.read(dst, static_cast<std::streamsize>(n));
  if (static_cast<size_t>(in.gcount()) != n) {
    throw Error(ErrorCode::kParseError,
                std::string("truncated tensor stream while reading ") + what);
  }
}

uint32_t GetU32(std::istream& in, const char* what) {
  unsigned char b[4];
  ReadExact(in, reinterpret_cast<char*>(b), 4, what);
  return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
         (static_cast<uint32_t>(b[2]) << 16) |
         (static_cast<uint32_t>(b[3]) << 24);
}

uint16_t GetU16(std::istream& in, const char* what) {
  unsigned char b[2];
  ReadExact(in, reinterpret_cast<char*>(b), 2, what);
  return static_cast<uint16_t>(b[0] | (b[1] << 8));
}

}  // namespace

void WriteTensor(std::ostream& out, const Tensor& tensor) {
  if (tensor.rank() < 1 || tensor.rank() > 255) {
    throw Error(ErrorCode::kIoError, "cannot encode tensor of rank " +
                                         std::to_string(tensor.rank()));
  }
  out.write(kTensorMagic, 4);
  PutU32(out, kTensorFormatVersion);
  out.put(static_cast<char>(tensor.rank()));
  for (int64_t d : tensor.shape()) PutU32(out, static_cast<uint32_t>(d));
  for (float v : tensor.data()) PutU32(out, std::bit_cast<uint32_t>(v));
  if (!out) throw Error(ErrorCode::kIoError, "tensor write failed");
}

Tensor ReadTensor(std::istream& in) {
  char magic[4];
  ReadExact(in, magic, 4, "magic");
  if (std::memcmp(magic, kTensorMagic, 4) != 0) {
    throw Error(ErrorCode::kParseError, "bad tensor magic");
  }
  const uint32_t version = GetU32(in, "version");
  if (version != kTensorFormatVersion) {
    throw Error(ErrorCode::kParseError,
                "unsupported tensor version " + std::to_string(version));
  }
  char rank_byte;
  ReadExact(in, &rank_byte, 1, "rank");
  const int rank = static_cast<unsigned char>(rank_byte);
  if (rank == 0) throw Error(ErrorCode::kParseError, "tensor rank 0");
  Shape shape(rank);
  for (int i = 0; i < rank; ++i) {
    shape[i] = GetU32(in, "dims");
    if (shape[i] == 0) throw Error(ErrorCode::kParseError, "zero extent");
  }
  const int64_t count = NumElements(shape);
  std::vector<float> data(count);
  std::vector<unsigned char> raw(count * 4);
  ReadExact(in, reinterpret_cast<char*>(raw.data()), raw.size(), "payload");
  for (int64_t i = 0; i < count; ++i) {
    const unsigned char* b = raw.data() + 4 * i;
    const uint32_t bits = static_cast<uint32_t>(b[0]) |
                          (static_cast<uint32_t>(b[1]) << 8) |
                          (static_cast<uint32_t>(b[2]) << 16) |
                          (static_cast<uint32_t>(b[3]) << 24);
    data[i] = std::bit_cast<float>(bits);
  }
  return Tensor(std::move(shape), std::move(data));
}

void SaveTensorFile(const std::filesystem::path& path, const Tensor& tensor) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  WriteTensor(out, tensor);
}

Tensor LoadTensorFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  return ReadTensor(in);
}

void WriteNamedTensors(std::ostream& out,
                       const std::map<std::string, Tensor>& tensors) {
  for (const auto& [name, tensor] : tensors) {
    if (name.size() > 0xffff) {
      throw Error(ErrorCode::kIoError, "tensor name too long: " + name);
    }
    PutU16(out, static_cast<uint16_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    WriteTensor(out, tensor);
  }
}

std::map<std::string, Tensor> ReadNamedTensors(std::istream& in) {
  std::map<std::string, Tensor> tensors;
  while (in.peek() != std::char_traits<char>::eof()) {
    const uint16_t len = GetU16(in, "name length");
    std::string name(len, '\0');
    ReadExact(in, name.data(), len, "name");
    Tensor t = ReadTensor(in);
    if (!tensors.emplace(name, std::move(t)).second) {
      throw Error(ErrorCode::kParseError, "duplicate tensor name " + name);
    }
  }
  return tensors;
}

void SaveNamedTensorsFile(const std::filesystem::path& path,
                          const std::map<std::string, Tensor>& tensors) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  WriteNamedTensors(out, tensors);
}

std::map<std::string, Tensor> LoadNamedTensorsFile(
    const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  return ReadNamedTensors(in);
}

}  // namespace deltadiff
