// Copyright 2026 The hypermarl-lab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <atomic>
#include <cstdlib>
#include <string>

#include "kernels_internal.hpp"

namespace hmlab::simd {
namespace {

bool cpu_has_avx2_fma() {
#if defined(__x86_64__) || defined(__i386__)
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable* resolve_default() {
  const char* env = std::getenv("HYPERMARL_LAB_KERNELS");
  const std::string want = env ? env : "auto";
  if (want == "scalar") return &scalar_kernels();
  if (const KernelTable* t = avx2_kernels()) return t;
  return &scalar_kernels();
}

std::atomic<const KernelTable*> g_active{nullptr};

}  // namespace

const KernelTable& scalar_kernels() { return detail::kScalarTable; }

const KernelTable* avx2_kernels() {
#if defined(HMLAB_HAVE_AVX2_TABLE)
  static const bool supported = cpu_has_avx2_fma();
  return supported ? &detail::kAvx2Table : nullptr;
#else
  return nullptr;
#endif
}

const KernelTable& active_kernels() {
  const KernelTable* t = g_active.load(std::memory_order_acquire);
  if (t == nullptr) {
    t = resolve_default();
    g_active.store(t, std::memory_order_release);
  }
  return *t;
}

bool select_kernels(std::string_view name) {
  const KernelTable* t = nullptr;
  if (name == "scalar") {
    t = &scalar_kernels();
  } else if (name == "avx2") {
    t = avx2_kernels();
  } else if (name == "auto") {
    t = avx2_kernels() ? avx2_kernels() : &scalar_kernels();
  }
  if (t == nullptr) return false;
  g_active.store(t, std::memory_order_release);
  return true;
}

}  // namespace hmlab::simd
