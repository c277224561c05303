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

#ifndef DELTADIFF_TENSOR_IO_H_
#define DELTADIFF_TENSOR_IO_H_

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>

#include "deltadiff/tensor.h"

namespace deltadiff {

// Binary tensor encoding:
//   "DTNS" | version u32 LE | rank u8 | dims u32[rank] LE | f32 LE payload.
inline constexpr char kTensorMagic[4] = {'D', 'T', 'N', 'S'};
inline constexpr uint32_t kTensorFormatVersion = 1;

void WriteTensor(std::ostream& out, const Tensor& tensor);
Tensor ReadTensor(std::istream& in);

void SaveTensorFile(const std::filesystem::path& path, const Tensor& tensor);
Tensor LoadTensorFile(const std::filesystem::path& path);

// Named tensor records: name_len u16 LE | utf8 name | DTNS tensor.
// Records are written in ascending name order.
void WriteNamedTensors(std::ostream& out,
                       const std::map<std::string, Tensor>& tensors);
std::map<std::string, Tensor> ReadNamedTensors(std::istream& in);

void SaveNamedTensorsFile(const std::filesystem::path& path,
                          const std::map<std::string, Tensor>& tensors);
std::map<std::string, Tensor> LoadNamedTensorsFile(
    const std::filesystem::path& path);

}  // namespace deltadiff

#endif  // DELTADIFF_TENSOR_IO_H_
