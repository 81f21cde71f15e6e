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

#include <atomic>
#include <cstdlib>
#include <string_view>

#include "kfds/simd.hpp"

namespace kfds::simd {
namespace {

const Kernels* best_available() {
  if (const char* env = std::getenv("KFDS_SIMD")) {
    const std::string_view want(env);
    if (want == "scalar") return &scalar_kernels();
    if (want == "avx2" && avx2_kernels()) return avx2_kernels();
    if (want == "neon" && neon_kernels()) return neon_kernels();
  }
  if (const Kernels* k = avx2_kernels()) return k;
  if (const Kernels* k = neon_kernels()) return k;
  return &scalar_kernels();
}

std::atomic<const Kernels*>& slot() {
  static std::atomic<const Kernels*> current{best_available()};
  return current;
}

}  // namespace

const Kernels& active() { return *slot().load(std::memory_order_acquire); }

bool select(Isa isa) {
  const Kernels* table = nullptr;
  switch (isa) {
    case Isa::kScalar: table = &scalar_kernels(); break;
    case Isa::kAvx2: table = avx2_kernels(); break;
    case Isa::kNeon: table = neon_kernels(); break;
  }
  if (table == nullptr) return false;
  slot().store(table, std::memory_order_release);
  return true;
}

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::kScalar: return "scalar";
    case Isa::kAvx2: return "avx2";
    case Isa::kNeon: return "neon";
  }
  return "unknown";
}

}  // namespace kfds::simd
