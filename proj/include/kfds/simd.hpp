// Copyright 2026 The KFDS Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Runtime-dispatched vector kernels. Every kernel has a scalar reference in
// kernels_scalar.cpp; the AVX2 and NEON variants must agree with it to within
// reassociation error (see tests/simd_test.cpp).

#include <cstddef>
#include <string_view>

namespace kfds::simd {

enum class Isa { kScalar, kAvx2, kNeon };

struct Kernels {
  Isa isa;
  // sum_i x[i] * y[i]
  double (*dot)(const double* x, const double* y, std::size_t n);
  // y[i] += alpha * x[i]
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // x[i] *= alpha
  void (*scale)(double alpha, double* x, std::size_t n);
  // max_i x[i]; n >= 1
  double (*max)(const double* x, std::size_t n);
  // sum_i x[i]
  double (*sum)(const double* x, std::size_t n);
};

const Kernels& scalar_kernels();

// Null when the variant was not compiled in or the CPU lacks the feature.
const Kernels* avx2_kernels();
const Kernels* neon_kernels();

// Best available table, unless overridden by select() or KFDS_SIMD.
const Kernels& active();

// Forces a specific table; returns false if it is unavailable.
bool select(Isa isa);

std::string_view isa_name(Isa isa);

}  // namespace kfds::simd
